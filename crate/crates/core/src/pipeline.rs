//! Splits a mean-zero function into blocks on which it is mean zero, solves
//! each block with the exact or the tower solver, and glues the results.
//!
//! The atomic part `D` is where `f` equals its step part (everything outside
//! the sampled support). After orienting `f` so that `∫_D f ≥ 0`:
//!
//! * `C = (D⁺ ∩ [lo, R_C)) ∪ D⁻ ∪ D⁰` is mean zero and finite-valued;
//! * the positive atoms left over form `C₁`, the sampled support forms `C₂`;
//! * `B₀ = C₂⁺ ∪ (C₂⁻ ∩ [lo, R_B0))` is mean zero and atom-free;
//! * `C̃₂ = C₂ ∖ B₀` is cut at `r_1 ≤ r_2 ≤ …` into `B_i` so that each
//!   atom `A_i = {f = y_i} ∩ C₁` together with `B_i` is mean zero.

use serde::{Deserialize, Serialize};

use crate::certificate::{norm_ratio, sup_or_zero, BlockKind, BlockRecord, CoboundaryCertificate, StageSummary};
use crate::error::{Error, Result};
use crate::exact::solve_step_parts;
use crate::exchange::IntervalExchange;
use crate::function::{Cmp, HybridFunction, PiecewiseAffine, SampledFunction};
use crate::interval::IntervalSet;
use crate::quadratic::{PiecewiseQuadratic, Side};
use crate::rational::Rat;
use crate::tower::{solve_tower_block, TowerConfig};
use crate::trim::cumulative_integral;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedBlock {
    pub a: IntervalSet,
    pub b: IntervalSet,
    pub y: Rat,
    pub r_interval: (Rat, Rat),
}

impl MixedBlock {
    pub fn set(&self) -> IntervalSet {
        self.a.union(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDecomposition {
    /// Renormalized and oriented input; every set below refers to it.
    pub f: HybridFunction,
    /// Whether `f` is the negated input.
    pub flipped: bool,
    /// Constant subtracted from the sampled part to make `f` mean zero.
    pub mean_shift: Rat,
    #[serde(rename = "D")]
    pub d: IntervalSet,
    #[serde(rename = "D_plus")]
    pub d_plus: IntervalSet,
    #[serde(rename = "D_minus")]
    pub d_minus: IntervalSet,
    #[serde(rename = "D_zero")]
    pub d_zero: IntervalSet,
    #[serde(rename = "R_C")]
    pub r_c: Rat,
    #[serde(rename = "C_block")]
    pub c_block: IntervalSet,
    #[serde(rename = "C1")]
    pub c1: IntervalSet,
    #[serde(rename = "C2")]
    pub c2: IntervalSet,
    #[serde(rename = "C2_plus")]
    pub c2_plus: IntervalSet,
    #[serde(rename = "C2_minus")]
    pub c2_minus: IntervalSet,
    #[serde(rename = "B0")]
    pub b0: IntervalSet,
    #[serde(rename = "R_B0")]
    pub r_b0: Rat,
    #[serde(rename = "C2_tilde")]
    pub c2_tilde: IntervalSet,
    pub blocks: Vec<MixedBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl DomainDecomposition {
    /// The nonempty parts, named as in the certificate.
    pub fn parts(&self) -> Vec<(String, IntervalSet)> {
        let mut out = Vec::new();
        if !self.c_block.is_empty() {
            out.push(("C".to_string(), self.c_block.clone()));
        }
        if !self.b0.is_empty() {
            out.push(("B0".to_string(), self.b0.clone()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("E{}", i + 1), b.set()));
        }
        out
    }

    /// Sum of the part measures.
    pub fn total_measure(&self) -> Rat {
        self.parts().iter().map(|(_, s)| s.measure()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tower: TowerConfig,
    /// Allowed `|∫ f|` over a block whose boundary comes from an inexact
    /// root; also bounds the root-finding precision.
    pub tolerance: Rat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let tower = TowerConfig::default();
        PipelineConfig {
            tolerance: tower.carve.tolerance.clone(),
            tower,
        }
    }
}

fn rightmost_root(q: &PiecewiseQuadratic, tol: &Rat, fallback: &Rat) -> Rat {
    q.root(Side::Rightmost, tol).map(|r| r.x).unwrap_or_else(|| fallback.clone())
}

fn renormalize(f: &HybridFunction) -> Result<(HybridFunction, Rat)> {
    let total = f.surrogate().integrate(&f.domain)?;
    if total.is_zero() {
        return Ok((f.clone(), Rat::zero()));
    }
    let Some(s) = &f.sampled_part else {
        return Err(Error::Precondition(format!("∫ f = {total}, expected 0")).in_block("step part"));
    };
    let shift = total / s.support().length();
    let values = s.values.iter().map(|v| v - &shift).collect();
    let sampled = SampledFunction::new(s.grid.clone(), values, s.lipschitz.clone())?;
    let g = HybridFunction::new(f.domain.clone(), f.step_part.clone(), Some(sampled))?;
    Ok((g, shift))
}

pub fn decompose_domain(f: &HybridFunction, cfg: &PipelineConfig) -> Result<DomainDecomposition> {
    let (normalized, mean_shift) = renormalize(f)?;
    let d = normalized.domain.difference(&normalized.sampled_support());
    let atoms_of = |h: &HybridFunction| h.step_part.restrict(&d);
    let flipped = atoms_of(&normalized).integral().is_negative();
    let f = if flipped { normalized.neg() } else { normalized };
    let step = atoms_of(&f);
    let surrogate = f.surrogate();
    let (lo, hi) = match f.domain.hull() {
        Some(h) => (h.lo, h.hi),
        None => return Err(Error::Precondition("empty domain".into())),
    };
    let mut notes = Vec::new();
    if !mean_shift.is_zero() {
        notes.push(format!("sampled part shifted by −{mean_shift} to make f mean zero"));
    }

    let d_plus = step.level_set(|v| v.is_positive());
    let d_minus = step.level_set(|v| v.is_negative());
    let d_zero = step.level_set(|v| v.is_zero());
    let step_aff = step.to_affine();
    // r ↦ ∫_{(D⁺ ∩ [lo, r)) ∪ D⁻} f is nondecreasing and piecewise linear
    let neg_mass = step_aff.integrate(&d_minus)?;
    let phi = cumulative_integral(&step_aff, &d_plus, &lo, &hi)?.map(|p| p.add_constant(&neg_mass));
    let r_c = rightmost_root(&phi, &Rat::zero(), &hi);
    let c_block = d_plus.clip(&lo, &r_c).union(&d_minus).union(&d_zero);
    let c_mass = step_aff.integrate(&c_block)?;
    if !c_mass.is_zero() {
        return Err(Error::Invariant(format!("∫ over C is {c_mass}")));
    }
    let c1 = d.difference(&c_block);

    let c2 = f.sampled_support();
    let nonneg = surrogate.level_set(Cmp::Ge, &Rat::zero());
    let c2_plus = c2.intersection(&nonneg);
    let c2_minus = c2.difference(&nonneg);
    let norm = sup_or_zero(&surrogate);
    let count = step.restrict(&c1).atoms().len();
    let tol = &cfg.tolerance / ((&norm + Rat::one()) * Rat::from_int(count as i64 + 2));

    let (b0, r_b0) = if c2.is_empty() {
        (IntervalSet::empty(), lo.clone())
    } else {
        let pos_mass = surrogate.integrate(&c2_plus)?;
        let psi = cumulative_integral(&surrogate, &c2_minus, &lo, &hi)?.map(|p| p.add_constant(&pos_mass));
        let r = rightmost_root(&psi, &tol, &hi);
        (c2_plus.union(&c2_minus.clip(&lo, &r)), r)
    };
    let mut c2_tilde = c2.difference(&b0);

    let mut atoms: Vec<(Rat, IntervalSet)> = step.restrict(&c1).atoms().into_iter().collect();
    atoms.sort_by(|a, b| a.1.inf().cmp(&b.1.inf()));
    let mut blocks = Vec::with_capacity(atoms.len());
    let mut b0 = b0;
    if atoms.is_empty() && !c2_tilde.is_empty() {
        notes.push(format!("leftover {} of the sampled part joins B0", c2_tilde.measure()));
        b0 = b0.union(&c2_tilde);
        c2_tilde = IntervalSet::empty();
    }
    let chi = cumulative_integral(&surrogate, &c2_tilde, &lo, &hi)?;
    let mut r_prev = lo.clone();
    for (i, (y, a)) in atoms.iter().enumerate() {
        let r = if i + 1 == atoms.len() {
            hi.clone()
        } else {
            let start = chi.eval(&r_prev).unwrap_or_default();
            let target = start - y * a.measure();
            let tail = chi.restrict(&r_prev, &hi).map(|p| p.add_constant(&-&target));
            rightmost_root(&tail, &tol, &hi)
        };
        blocks.push(MixedBlock {
            a: a.clone(),
            b: c2_tilde.clip(&r_prev, &r),
            y: y.clone(),
            r_interval: (r_prev.clone(), r.clone()),
        });
        r_prev = r;
    }

    Ok(DomainDecomposition {
        f,
        flipped,
        mean_shift,
        d,
        d_plus,
        d_minus,
        d_zero,
        r_c,
        c_block,
        c1,
        c2,
        c2_plus,
        c2_minus,
        b0,
        r_b0,
        c2_tilde,
        blocks,
        notes,
    })
}

/// Solves `g∘T − g = f` up to `δ` with `‖g‖∞ ≤ (1 + ε)‖f‖∞`, exactly on
/// the finite-valued part and with the tower solver elsewhere.
pub fn solve_full(f: &HybridFunction, eps: &Rat, delta: &Rat, cfg: &PipelineConfig) -> Result<CoboundaryCertificate> {
    let dec = decompose_domain(f, cfg)?;
    let surrogate = dec.f.surrogate();
    let mut ts = Vec::new();
    let mut gs: Vec<PiecewiseAffine> = Vec::new();
    let mut records = Vec::new();
    let mut ledger: Vec<StageSummary> = Vec::new();
    let mut notes = dec.notes.clone();

    if !dec.c_block.is_empty() {
        let step = dec.f.step_part.restrict(&dec.c_block);
        let (t, g) = solve_step_parts(&step).map_err(|e| e.in_block("C"))?;
        let norm_g = sup_or_zero(&g);
        records.push(BlockRecord {
            name: "C".into(),
            kind: BlockKind::Step,
            set: dec.c_block.clone(),
            residual: Rat::zero(),
            norm_f: step.sup_norm().unwrap_or_default(),
            norm_g,
            converged: true,
            notes: Vec::new(),
        });
        ts.push(t);
        gs.push(g);
    }
    let mut tower_parts: Vec<(String, IntervalSet, Option<Rat>)> = Vec::new();
    if !dec.b0.is_empty() {
        tower_parts.push(("B0".into(), dec.b0.clone(), None));
    }
    for (i, b) in dec.blocks.iter().enumerate() {
        tower_parts.push((format!("E{}", i + 1), b.set(), Some(b.y.clone())));
    }
    for (name, set, kappa) in tower_parts {
        let block = solve_tower_block(&set, &surrogate, eps, delta, &cfg.tower).map_err(|e| e.in_block(name.clone()))?;
        let mut block_notes = block.notes.clone();
        if let Some(y) = kappa {
            block_notes.push(format!("κ = {y}"));
        }
        records.push(BlockRecord {
            name,
            kind: BlockKind::Tower,
            set,
            residual: block.residual.clone(),
            norm_f: block.norm_f.clone(),
            norm_g: block.norm_g.clone(),
            converged: block.converged,
            notes: block_notes,
        });
        ledger.extend(block.summaries);
        ts.push(block.t);
        gs.push(block.g);
    }

    let t = IntervalExchange::glue(&ts)?;
    let mut g = PiecewiseAffine::zero(&IntervalSet::empty());
    for part in &gs {
        g = g.glue(part)?;
    }
    if g.domain() != dec.f.domain {
        return Err(Error::Invariant(format!("blocks cover {} instead of {}", g.domain(), dec.f.domain)));
    }
    if dec.flipped {
        g = g.neg();
        notes.push("solved −f; g is negated".into());
    }
    let residual = records.iter().map(|r| r.residual.clone()).max().unwrap_or_default();
    let converged = records.iter().all(|r| r.converged);
    let norm_f = sup_or_zero(&surrogate);
    let norm_g = sup_or_zero(&g);
    let ratio = norm_ratio(&norm_g, &norm_f);
    if ratio > Rat::one() + eps {
        notes.push(format!("‖g‖/‖f‖ = {ratio} exceeds 1 + ε"));
    }
    let f_out = if dec.flipped { dec.f.neg() } else { dec.f.clone() };
    Ok(CoboundaryCertificate {
        representation_error: f_out.surrogate_error_bound(),
        f: f_out,
        t,
        g,
        eps: eps.clone(),
        exact: residual.is_zero() && f.is_step(),
        residual_bound: residual,
        norm_ratio: ratio,
        converged,
        blocks: records,
        stage_ledger: if ledger.is_empty() { None } else { Some(ledger) },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_step;
    use crate::function::{StepFunction, StepPiece};
    use crate::interval::Interval;
    use crate::rational::rat;
    use crate::tower::solve_tower_certificate;

    fn step_example() -> StepFunction {
        StepFunction::new(vec![
            StepPiece::new(Rat::zero(), rat(1, 4), rat(3, 4)),
            StepPiece::new(rat(1, 4), Rat::one(), rat(-1, 4)),
        ])
        .unwrap()
    }

    fn ramp() -> HybridFunction {
        let s = SampledFunction::from_fn(&Rat::zero(), &Rat::one(), 1 << 6, Rat::one(), |t| t - rat(1, 2)).unwrap();
        HybridFunction::from_sampled(s).unwrap()
    }

    /// 1/4 on [0, 1/3), then −3/8 (t − 1/3) sampled on [1/3, 1).
    fn hybrid() -> HybridFunction {
        let s = SampledFunction::from_fn(&rat(1, 3), &Rat::one(), 64, rat(3, 8), |t| rat(-3, 8) * (t - rat(1, 3))).unwrap();
        let atom = StepFunction::constant(&IntervalSet::interval(Rat::zero(), rat(1, 3)), rat(1, 4));
        HybridFunction::new(IntervalSet::unit(), atom, Some(s)).unwrap()
    }

    #[test]
    fn step_decomposition() {
        let dec = decompose_domain(&HybridFunction::from_step(step_example()), &PipelineConfig::default()).unwrap();
        assert_eq!(dec.d, IntervalSet::unit());
        assert_eq!(dec.c_block, IntervalSet::unit());
        assert_eq!(dec.r_c, Rat::one());
        assert!(dec.b0.is_empty() && dec.blocks.is_empty());
    }

    #[test]
    fn sampled_decomposition() {
        let dec = decompose_domain(&ramp(), &PipelineConfig::default()).unwrap();
        assert!(dec.d.is_empty() && dec.c_block.is_empty());
        assert_eq!(dec.c2, IntervalSet::unit());
        assert_eq!(dec.b0, IntervalSet::unit());
        assert!(dec.blocks.is_empty());
    }

    #[test]
    fn hybrid_decomposition() {
        let dec = decompose_domain(&hybrid(), &PipelineConfig::default()).unwrap();
        assert!(dec.c_block.is_empty());
        assert!(dec.b0.is_empty());
        assert_eq!(dec.blocks.len(), 1);
        let b = &dec.blocks[0];
        assert_eq!(b.y, rat(1, 4));
        assert_eq!(b.a, IntervalSet::interval(Rat::zero(), rat(1, 3)));
        assert_eq!(b.b, IntervalSet::interval(rat(1, 3), Rat::one()));
        assert_eq!(dec.total_measure(), Rat::one());
    }

    #[test]
    fn step_delegates_to_exact_solver() {
        let f = step_example();
        let full = solve_full(
            &HybridFunction::from_step(f.clone()),
            &rat(1, 10),
            &rat(1, 1000),
            &PipelineConfig::default(),
        )
        .unwrap();
        let direct = solve_step(&f).unwrap();
        assert_eq!(full.t, direct.t);
        assert_eq!(full.g, direct.g);
        assert!(full.exact);
    }

    #[test]
    fn sampled_delegates_to_tower() {
        let cfg = PipelineConfig::default();
        let full = solve_full(&ramp(), &rat(1, 10), &rat(1, 1000), &cfg).unwrap();
        let direct = solve_tower_certificate(&ramp(), &rat(1, 10), &rat(1, 1000), &cfg.tower).unwrap();
        assert_eq!(full.t, direct.t);
        assert_eq!(full.g, direct.g);
        assert_eq!(full.residual_bound, direct.residual_bound);
    }

    #[test]
    fn hybrid_glue_and_symmetry() {
        let cfg = PipelineConfig::default();
        let eps = rat(1, 10);
        let delta = rat(1, 1000);
        let a = solve_full(&hybrid(), &eps, &delta, &cfg).unwrap();
        assert!(a.residual_bound <= delta);
        assert!(a.norm_ratio <= Rat::one() + &eps);
        let b = solve_full(&hybrid().neg(), &eps, &delta, &cfg).unwrap();
        assert_eq!(a.residual_bound, b.residual_bound);
        assert_eq!(a.norm_ratio, b.norm_ratio);
    }

    #[test]
    fn nonzero_step_mean_is_rejected() {
        let f = StepFunction::constant(&IntervalSet::from(Interval::unit()), rat(1, 8));
        let e = solve_full(
            &HybridFunction::from_step(f),
            &rat(1, 10),
            &rat(1, 1000),
            &PipelineConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(e.root(), Error::Precondition(_)));
    }
}
