//! The solver output: `(f, T, g)` plus the bounds the solvers claim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::IntervalExchange;
use crate::function::{HybridFunction, PiecewiseAffine};
use crate::interval::IntervalSet;
use crate::rational::Rat;
use crate::rearrange::Tier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Finite-valued part, solved exactly by pairing positive and negative mass.
    Step,
    /// Solved by a partition tower up to a residual.
    Tower,
}

/// Where one part of the glued solution came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub name: String,
    pub kind: BlockKind,
    pub set: IntervalSet,
    /// Sup of `|g∘T − g − f|` on this block.
    pub residual: Rat,
    pub norm_f: Rat,
    pub norm_g: Rat,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-stage numbers from the tower solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub k: usize,
    pub level: usize,
    pub cells: usize,
    pub norm_g: Rat,
    pub norm_h: Rat,
    /// `‖f − f_n‖∞` at this stage's level.
    pub level_residual: Rat,
    pub cyclic: bool,
    pub refines_previous: bool,
    pub identity_exact: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tiers: Vec<Tier>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoboundaryCertificate {
    pub f: HybridFunction,
    #[serde(rename = "T")]
    pub t: IntervalExchange,
    pub g: PiecewiseAffine,
    pub eps: Rat,
    pub exact: bool,
    /// Claimed bound on `|g∘T − g − f|` off the exceptional points, with `f`
    /// taken as its exact piecewise-affine representation.
    pub residual_bound: Rat,
    /// Declared bound on the distance between sampled data and its
    /// piecewise-affine representation; zero for step input.
    pub representation_error: Rat,
    /// `‖g‖∞ / ‖f‖∞` (zero when `f ≡ 0`).
    pub norm_ratio: Rat,
    pub converged: bool,
    pub blocks: Vec<BlockRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_ledger: Option<Vec<StageSummary>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CoboundaryCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<CoboundaryCertificate> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(format!("certificate: {e}")))
    }
}

/// `‖g‖/‖f‖`, or zero when `f` vanishes.
pub(crate) fn norm_ratio(norm_g: &Rat, norm_f: &Rat) -> Rat {
    if norm_f.is_zero() {
        Rat::zero()
    } else {
        norm_g / norm_f
    }
}

/// Sup norm that treats an empty function as zero.
pub(crate) fn sup_or_zero(f: &PiecewiseAffine) -> Rat {
    f.sup_norm().unwrap_or_default()
}
