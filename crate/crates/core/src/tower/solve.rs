use serde::{Deserialize, Serialize};

use super::stage::{base_cycle, check_stage, extend_cycle, SolverStage};
use super::{PartitionTower, TowerBuilder, TowerConfig, TowerMode};
use crate::certificate::{norm_ratio, sup_or_zero, BlockKind, BlockRecord, CoboundaryCertificate, StageSummary};
use crate::error::{Error, Result};
use crate::exchange::IntervalExchange;
use crate::function::{HybridFunction, PiecewiseAffine, StepFunction};
use crate::interval::IntervalSet;
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSolution {
    pub tower: PartitionTower,
    pub stages: Vec<SolverStage>,
    /// Tower level used by each stage.
    pub schedule: Vec<usize>,
    /// Exchange of the core set.
    pub t: IntervalExchange,
    pub g: PiecewiseAffine,
    /// Cell averages at the last scheduled level, minus `shift`.
    pub f_n: StepFunction,
    /// Mean of `f` over the core, removed before solving.
    pub shift: Rat,
    /// Exact sup of `|f − (g∘T − g)|` over the core.
    pub residual: Rat,
    pub norm_f: Rat,
    pub norm_g: Rat,
    pub converged: bool,
    pub summaries: Vec<StageSummary>,
}

impl TowerSolution {
    pub fn core(&self) -> &IntervalSet {
        &self.tower.core
    }
}

/// Picks the tower levels for each stage: stage `k` uses the first level
/// past the previous one whose approximation error is at most
/// `2^{−k−3} ε ‖f‖`. Stops once that error is at most `δ`.
fn schedule(b: &mut TowerBuilder<'_>, eps: &Rat, delta: &Rat, norm_f: &Rat, depth_max: usize) -> Result<(Vec<usize>, bool)> {
    let mut chosen = Vec::new();
    let mut next = 0;
    let mut converged = false;
    'stages: for k in 0.. {
        let target = Rat::pow2(-(k as i64) - 3) * eps * norm_f;
        let mut n = next;
        loop {
            if n > depth_max {
                break 'stages;
            }
            while b.depth() < n {
                b.push_level()?;
            }
            if b.level(n).bound <= target {
                break;
            }
            n += 1;
        }
        chosen.push(n);
        if b.level(n).bound <= *delta {
            converged = true;
            break;
        }
        next = n + 1;
    }
    if chosen.is_empty() {
        chosen.push(b.depth());
    }
    Ok((chosen, converged))
}

/// Solves `g∘T − g ≈ f` on `K` with `‖f − (g∘T − g)‖∞ ≤ δ` when the tower
/// converges within `depth_max` levels. In faithful mode the solution lives
/// on the core of the tower, which misses at most `ε` of `K`.
pub fn solve_tower(k: &IntervalSet, f: &PiecewiseAffine, eps: &Rat, delta: &Rat, cfg: &TowerConfig) -> Result<TowerSolution> {
    let mut b = TowerBuilder::new(k, f, eps, cfg)?;
    let norm_f = sup_or_zero(&f.restrict(k));
    let (chosen, mut converged) = schedule(&mut b, eps, delta, &norm_f, cfg.depth_max)?;
    let tower = b.finish()?;
    let core = tower.core.clone();
    let shift = f.integrate(&core)? / core.measure();
    if cfg.mode == TowerMode::Faithful {
        // cutting the levels down to the core can only lower the bounds
        converged = tower.levels[*chosen.last().expect("nonempty")].bound <= *delta;
    }

    let mut stages: Vec<SolverStage> = Vec::with_capacity(chosen.len());
    let mut summaries = Vec::with_capacity(chosen.len());
    for (idx, &n) in chosen.iter().enumerate() {
        let level = &tower.levels[n];
        let avgs = level.averages();
        let stage = match stages.last() {
            None => {
                let values: Vec<Rat> = avgs.iter().map(|a| a - &shift).collect();
                base_cycle(n, &level.cells, &values)?
            }
            Some(prev) => {
                let parent = tower.levels[prev.level].averages();
                let r = level.len() / parent.len();
                let values: Vec<Rat> = avgs.iter().enumerate().map(|(i, a)| a - &parent[i / r]).collect();
                extend_cycle(prev, n, &level.cells, &values)?
            }
        };
        let prev = stages.last().map(|p| (p, tower.levels[p.level].cells.as_slice()));
        let checks = check_stage(&stage, &level.cells, prev)?;
        if !checks.all() {
            return Err(Error::Invariant(format!("stage {idx} at level {n} fails its checks: {checks:?}")));
        }
        summaries.push(StageSummary {
            k: idx,
            level: n,
            cells: level.len(),
            norm_g: stage.norm_g.clone(),
            norm_h: stage.norm_h.clone(),
            level_residual: level.bound.clone(),
            cyclic: checks.cyclic,
            refines_previous: checks.refines_previous,
            identity_exact: checks.identity_exact,
            tiers: stage.tiers.clone(),
        });
        stages.push(stage);
    }

    let last = stages.last().expect("at least one stage");
    let t = last.t.clone();
    let mut g = StepFunction::zero(&core);
    for s in &stages {
        g = g.add(&s.g)?;
    }
    // g is only fixed up to a constant; center its range
    if let (Some(hi), Some(lo)) = (g.max_value(), g.min_value()) {
        let mid = -Rat::midpoint(hi, lo);
        g = g.add_constant(&mid);
    }
    let f_n = tower.levels[last.level].cond_exp.add_constant(&-&shift);
    let g = g.to_affine();
    let coboundary = g.pull_back(&t)?.sub(&g)?;
    if coboundary != f_n.to_affine() {
        return Err(Error::Invariant("the stages do not telescope to the last level".into()));
    }
    let residual = sup_or_zero(&f.restrict(&core).sub(&coboundary)?);
    let norm_g = sup_or_zero(&g);
    Ok(TowerSolution {
        schedule: chosen,
        tower,
        stages,
        t,
        g,
        f_n,
        shift,
        residual,
        norm_f,
        norm_g,
        converged,
        summaries,
    })
}

/// A tower solution extended to the whole block: whatever the core misses is
/// covered by the identity with `g = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerBlock {
    pub t: IntervalExchange,
    pub g: PiecewiseAffine,
    /// Sup of `|f − (g∘T − g)|` over the block.
    pub residual: Rat,
    pub norm_f: Rat,
    pub norm_g: Rat,
    pub converged: bool,
    pub summaries: Vec<StageSummary>,
    pub notes: Vec<String>,
}

pub fn solve_tower_block(k: &IntervalSet, f: &PiecewiseAffine, eps: &Rat, delta: &Rat, cfg: &TowerConfig) -> Result<TowerBlock> {
    let sol = solve_tower(k, f, eps, delta, cfg)?;
    let rest = k.difference(sol.core());
    let mut notes = Vec::new();
    let mut residual = sol.residual.clone();
    let (t, g) = if rest.is_empty() {
        (sol.t, sol.g)
    } else {
        let outside = sup_or_zero(&f.restrict(&rest));
        notes.push(format!(
            "tower core misses {} of the block; T is the identity and g = 0 there (|f| ≤ {outside})",
            rest.measure()
        ));
        residual = Rat::max_of(&residual, &outside).clone();
        (
            IntervalExchange::glue(&[sol.t, IntervalExchange::identity(&rest)])?,
            sol.g.glue(&PiecewiseAffine::zero(&rest))?,
        )
    };
    if !sol.shift.is_zero() {
        notes.push(format!("mean {} of f over the core was removed before solving", sol.shift));
    }
    Ok(TowerBlock {
        norm_g: sup_or_zero(&g),
        t,
        g,
        residual,
        norm_f: sol.norm_f,
        converged: sol.converged,
        summaries: sol.summaries,
        notes,
    })
}

/// Runs the tower solver on the whole domain of `f` and packages the result.
pub fn solve_tower_certificate(f: &HybridFunction, eps: &Rat, delta: &Rat, cfg: &TowerConfig) -> Result<CoboundaryCertificate> {
    let domain = f.domain.clone();
    let b = solve_tower_block(&domain, &f.surrogate(), eps, delta, cfg)?;
    Ok(CoboundaryCertificate {
        f: f.clone(),
        t: b.t,
        eps: eps.clone(),
        exact: b.residual.is_zero(),
        representation_error: f.surrogate_error_bound(),
        norm_ratio: norm_ratio(&b.norm_g, &b.norm_f),
        converged: b.converged,
        blocks: vec![BlockRecord {
            name: "K".into(),
            kind: BlockKind::Tower,
            set: domain,
            residual: b.residual.clone(),
            norm_f: b.norm_f,
            norm_g: b.norm_g,
            converged: b.converged,
            notes: Vec::new(),
        }],
        residual_bound: b.residual,
        g: b.g,
        stage_ledger: Some(b.summaries),
        notes: b.notes,
    })
}
