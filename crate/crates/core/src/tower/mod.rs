//! Nested partitions into equal-measure cells, and the staged solver built on
//! them.
//!
//! Level `n` of a [`PartitionTower`] splits the core set into
//! `m_0 · m_1 ⋯ m_{n−1}` cells of equal measure; the children of cell `i` at
//! the next level are the `m_n` consecutive cells starting at `i · m_n`.

mod solve;
mod stage;

pub use solve::{solve_tower, solve_tower_block, solve_tower_certificate, TowerBlock, TowerSolution};
pub use stage::{base_cycle, check_stage, extend_cycle, SolverStage, StageChecks};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::carve::{split_half, CarveConfig, CarveTrace};
use crate::error::{Error, Result};
use crate::exchange::IntervalExchange;
use crate::function::{PiecewiseAffine, StepFunction, StepPiece};
use crate::interval::IntervalSet;
use crate::rational::{DenominatorGuard, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TowerMode {
    /// Cells are aligned with every jump of `f`; nothing is carved away.
    #[default]
    Exact,
    /// Every cell is shrunk around its midpoint before it is subdivided, so
    /// that children never straddle the midpoint. Covers a core set of
    /// measure at least `λ(K) − ε`.
    Faithful,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerConfig {
    pub mode: TowerMode,
    pub depth_max: usize,
    /// Refuse to build a level with more cells than this.
    pub max_cells: usize,
    pub carve: CarveConfig,
    pub guard: DenominatorGuard,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            mode: TowerMode::Exact,
            depth_max: 16,
            max_cells: 1 << 16,
            carve: CarveConfig::default(),
            guard: DenominatorGuard::unlimited(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub n: usize,
    /// Branching from the previous level (1 at level 0).
    pub m_prev: usize,
    pub cells: Vec<IntervalSet>,
    pub cell_measure: Rat,
    /// Measure carved from each parent before subdividing (0 in exact mode).
    pub eps_n: Rat,
    /// Cell averages of `f`.
    pub cond_exp: StepFunction,
    /// Upper bound on `‖f − f_n‖∞` over the cells.
    pub bound: Rat,
}

impl TowerLevel {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell averages, in cell order.
    pub fn averages(&self) -> Vec<Rat> {
        self.cells
            .iter()
            .map(|c| {
                let x = c.inf().expect("cells are nonempty");
                self.cond_exp.value_at(x).cloned().expect("cell inside the domain")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTower {
    pub mode: TowerMode,
    pub base: IntervalSet,
    pub pack: IntervalExchange,
    pub levels: Vec<TowerLevel>,
    /// Jump points of `f` in packed coordinates; exact mode makes each one a
    /// cell boundary from level 1 on.
    pub interface_points: Vec<Rat>,
    /// The set the deepest level covers.
    pub core: IntervalSet,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub carve_traces: Vec<CarveTrace>,
}

/// Cell averages of `f` as a step function on the union of the cells.
pub fn conditional_expectation(f: &PiecewiseAffine, cells: &[IntervalSet]) -> Result<StepFunction> {
    let mut pieces = Vec::new();
    for c in cells {
        let m = c.measure();
        if !m.is_positive() {
            return Err(Error::Invariant(format!("cell {c} has zero measure")));
        }
        let avg = f.integrate(c)? / m;
        for iv in c.pieces() {
            pieces.push(StepPiece::new(iv.lo.clone(), iv.hi.clone(), avg.clone()));
        }
    }
    StepFunction::new(pieces)
}

fn max_deviation(f: &PiecewiseAffine, cells: &[IntervalSet]) -> Result<Rat> {
    let mut worst = Rat::zero();
    for c in cells {
        let d = f.deviation_from_mean(c)?;
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

fn max_oscillation(f: &PiecewiseAffine, cells: &[IntervalSet]) -> Rat {
    cells
        .iter()
        .map(|c| match (f.max_on(c), f.min_on(c)) {
            (Some(a), Some(b)) => a - b,
            _ => Rat::zero(),
        })
        .max()
        .unwrap_or_default()
}

fn to_usize(n: &BigInt, what: &str) -> Result<usize> {
    n.to_usize()
        .ok_or_else(|| Error::Resource(format!("{what} {n} does not fit in memory")))
}

/// Incremental tower construction; levels are added on demand.
pub struct TowerBuilder<'a> {
    f: &'a PiecewiseAffine,
    eps: Rat,
    cfg: TowerConfig,
    tower: PartitionTower,
    packed_f: PiecewiseAffine,
    unpack: IntervalExchange,
}

impl<'a> TowerBuilder<'a> {
    pub fn new(k: &IntervalSet, f: &'a PiecewiseAffine, eps: &Rat, cfg: &TowerConfig) -> Result<TowerBuilder<'a>> {
        let pack = IntervalExchange::canonical_pack(k)?;
        let unpack = pack.invert();
        let restricted = f.restrict(k);
        if restricted.domain() != *k {
            return Err(Error::DomainMismatch(format!("{k} is not inside the domain of f")));
        }
        let total = f.integrate(k)?;
        let allowed = if restricted.is_step() {
            Rat::zero()
        } else {
            cfg.carve.tolerance.clone()
        };
        if total.abs() > allowed {
            return Err(Error::Precondition(format!("∫ f over the tower base is {total}, expected 0")));
        }
        let packed_f = restricted.pull_back(&unpack)?;
        let interface_points = packed_f.jump_points();
        let cells = vec![k.clone()];
        let level0 = TowerLevel {
            n: 0,
            m_prev: 1,
            cond_exp: conditional_expectation(f, &cells)?,
            bound: max_deviation(f, &cells)?,
            cell_measure: k.measure(),
            eps_n: Rat::zero(),
            cells,
        };
        Ok(TowerBuilder {
            f,
            eps: eps.clone(),
            cfg: cfg.clone(),
            tower: PartitionTower {
                mode: cfg.mode,
                base: k.clone(),
                pack,
                levels: vec![level0],
                interface_points,
                core: k.clone(),
                carve_traces: Vec::new(),
            },
            packed_f,
            unpack,
        })
    }

    pub fn depth(&self) -> usize {
        self.tower.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &TowerLevel {
        &self.tower.levels[n]
    }

    /// Adds the next level and returns it.
    pub fn push_level(&mut self) -> Result<&TowerLevel> {
        let level = match self.cfg.mode {
            TowerMode::Exact => self.next_exact()?,
            TowerMode::Faithful => self.next_faithful()?,
        };
        for c in &level.cells {
            for iv in c.pieces() {
                self.cfg.guard.check("cell boundary", &iv.lo)?;
                self.cfg.guard.check("cell boundary", &iv.hi)?;
            }
        }
        self.tower.core = IntervalSet::new(level.cells.iter().flat_map(|c| c.pieces().iter().cloned()).collect());
        self.tower.levels.push(level);
        Ok(self.tower.levels.last().expect("just pushed"))
    }

    fn check_size(&self, count: &BigInt) -> Result<usize> {
        let n = to_usize(count, "cell count")?;
        if n > self.cfg.max_cells {
            return Err(Error::Resource(format!(
                "level {} would have {n} cells, limit is {}",
                self.depth() + 1,
                self.cfg.max_cells
            )));
        }
        Ok(n)
    }

    fn next_exact(&self) -> Result<TowerLevel> {
        let prev = self.tower.levels.last().expect("level 0 exists");
        let total = self.tower.base.measure();
        let m = if prev.n == 0 {
            let mut l = BigInt::from(2);
            for p in &self.tower.interface_points {
                l = l.lcm((p / &total).denom());
            }
            l
        } else {
            BigInt::from(2)
        };
        let count = self.check_size(&(BigInt::from(prev.len()) * &m))?;
        let width = &total / Rat::from_int(count as i64);
        let packed: Vec<IntervalSet> = (0..count)
            .map(|j| {
                let lo = &width * Rat::from_int(j as i64);
                let hi = &lo + &width;
                IntervalSet::interval(lo, hi)
            })
            .collect();
        let bound = max_deviation(&self.packed_f, &packed)?;
        let cells = packed.iter().map(|c| self.unpack.map_set(c)).collect::<Result<Vec<_>>>()?;
        Ok(TowerLevel {
            n: prev.n + 1,
            m_prev: to_usize(&m, "branching")?,
            cond_exp: conditional_expectation(self.f, &cells)?,
            cell_measure: width,
            eps_n: Rat::zero(),
            cells,
            bound,
        })
    }

    fn next_faithful(&mut self) -> Result<TowerLevel> {
        let prev = self.tower.levels.last().expect("level 0 exists").clone();
        let n = prev.n;
        let count = Rat::from_int(prev.len() as i64);
        // ε_n below ε/(2ⁿ|𝓔_n|), M_n and every half of every cell.
        let mut cap = Rat::min_of(&(&self.eps / (Rat::pow2(n as i64) * &count)), &prev.cell_measure).clone();
        for c in &prev.cells {
            let h = c.hull().expect("nonempty cell");
            let mid = h.midpoint();
            for half in [c.clip(&h.lo, &mid), c.clip(&mid, &h.hi)] {
                let m = half.measure();
                if m.is_positive() && m < cap {
                    cap = m;
                }
            }
        }
        let eps_n = cap.half();
        let mut carve = self.cfg.carve.clone();
        carve.ratio_bits.get_or_insert(8);
        let mut shrunk = Vec::with_capacity(prev.len());
        let mut lcm = BigInt::one();
        for c in &prev.cells {
            let avg = self.f.integrate(c)? / c.measure();
            let h = self.f.restrict(c).add_constant(&-avg);
            let split = split_half(c, &h, &eps_n, &carve)?;
            lcm = lcm.lcm(split.q());
            self.tower.carve_traces.push(split.trace.clone());
            shrunk.push(split);
        }
        let m = if lcm < BigInt::from(2) { BigInt::from(2) } else { lcm };
        let total = self.check_size(&(BigInt::from(prev.len()) * &m))?;
        let m_us = to_usize(&m, "branching")?;
        let mut cells = Vec::with_capacity(total);
        for s in &shrunk {
            cells.extend(s.set.split_equal(m_us));
        }
        let cell_measure = (&prev.cell_measure - &eps_n) / Rat::from_int(m_us as i64);
        if let Some(c) = cells.iter().find(|c| c.measure() != cell_measure) {
            return Err(Error::Invariant(format!("cell {c} does not have measure {cell_measure}")));
        }
        Ok(TowerLevel {
            n: n + 1,
            m_prev: m_us,
            cond_exp: conditional_expectation(self.f, &cells)?,
            bound: max_oscillation(self.f, &cells),
            cell_measure,
            eps_n,
            cells,
        })
    }

    /// Finishes the tower. In faithful mode every level is cut down to the
    /// core (the deepest level's union), and averages and bounds are
    /// recomputed there.
    pub fn finish(mut self) -> Result<PartitionTower> {
        if self.cfg.mode == TowerMode::Faithful {
            let core = self.tower.core.clone();
            let core_measure = core.measure();
            for level in &mut self.tower.levels {
                level.cells = level.cells.iter().map(|c| c.intersection(&core)).collect();
                let expected = &core_measure / Rat::from_int(level.cells.len() as i64);
                if let Some(c) = level.cells.iter().find(|c| c.measure() != expected) {
                    return Err(Error::Invariant(format!(
                        "level {} cell {c} meets the core in {}, expected {expected}",
                        level.n,
                        c.measure()
                    )));
                }
                level.cell_measure = expected;
                level.cond_exp = conditional_expectation(self.f, &level.cells)?;
                level.bound = max_deviation(self.f, &level.cells)?;
            }
        }
        Ok(self.tower)
    }
}

/// Builds `depth` levels below the base.
pub fn build_tower(k: &IntervalSet, f: &PiecewiseAffine, eps: &Rat, depth: usize, cfg: &TowerConfig) -> Result<PartitionTower> {
    let mut b = TowerBuilder::new(k, f, eps, cfg)?;
    for _ in 0..depth {
        b.push_level()?;
    }
    b.finish()
}

impl PartitionTower {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Index of the ancestor at level `up` of cell `i` at level `down`.
    pub fn ancestor(&self, down: usize, i: usize, up: usize) -> usize {
        let ratio = self.levels[down].len() / self.levels[up].len();
        i / ratio
    }

    /// Every level's cells are disjoint, of equal measure, and nested in
    /// their parents.
    pub fn check_structure(&self) -> Result<()> {
        for level in &self.levels {
            let mut seen = IntervalSet::empty();
            for c in &level.cells {
                if c.measure() != level.cell_measure {
                    return Err(Error::Invariant(format!("level {} cell {c} has the wrong measure", level.n)));
                }
                if !seen.is_disjoint(c) {
                    return Err(Error::Invariant(format!("level {} cells overlap at {c}", level.n)));
                }
                seen = seen.union(c);
            }
        }
        for w in self.levels.windows(2) {
            let m = w[1].len() / w[0].len();
            for (i, c) in w[1].cells.iter().enumerate() {
                if !c.is_subset(&w[0].cells[i / m]) {
                    return Err(Error::Invariant(format!("level {} cell {i} is not inside its parent", w[1].n)));
                }
            }
        }
        Ok(())
    }

    /// Largest hull diameter among the cells of level `n`.
    pub fn max_diameter(&self, n: usize) -> Rat {
        self.levels[n]
            .cells
            .iter()
            .filter_map(|c| c.hull().map(|h| h.length()))
            .max()
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::rational::rat;

    fn ramp() -> PiecewiseAffine {
        PiecewiseAffine::linear(&Interval::unit(), Rat::one(), rat(-1, 2))
    }

    #[test]
    fn dyadic_tower_for_ramp() {
        let t = build_tower(&IntervalSet::unit(), &ramp(), &rat(1, 10), 4, &TowerConfig::default()).unwrap();
        t.check_structure().unwrap();
        for n in 1..=4 {
            assert_eq!(t.levels[n].len(), 1 << n);
            assert_eq!(t.levels[n].bound, Rat::pow2(-(n as i64) - 1));
        }
        assert_eq!(t.levels[1].averages(), vec![rat(-1, 4), rat(1, 4)]);
    }

    #[test]
    fn interface_alignment() {
        let f = StepFunction::new(vec![
            StepPiece::new(Rat::zero(), rat(1, 3), rat(1, 4)),
            StepPiece::new(rat(1, 3), Rat::one(), rat(-1, 8)),
        ])
        .unwrap()
        .to_affine();
        let t = build_tower(&IntervalSet::unit(), &f, &rat(1, 10), 2, &TowerConfig::default()).unwrap();
        assert_eq!(t.levels[1].m_prev, 6);
        assert_eq!(t.levels[1].bound, Rat::zero());
        assert!(t.levels[1]
            .cells
            .iter()
            .all(|c| !c.contains(&rat(1, 3)) || c.inf() == Some(&rat(1, 3))));
    }

    #[test]
    fn constant_zero_has_no_oscillation() {
        let z = PiecewiseAffine::zero(&IntervalSet::unit());
        let t = build_tower(&IntervalSet::unit(), &z, &rat(1, 10), 3, &TowerConfig::default()).unwrap();
        assert!(t.levels.iter().all(|l| l.bound.is_zero()));
    }

    #[test]
    fn faithful_tower_shrinks_within_budget() {
        let cfg = TowerConfig {
            mode: TowerMode::Faithful,
            ..TowerConfig::default()
        };
        let t = build_tower(&IntervalSet::unit(), &ramp(), &rat(1, 10), 2, &cfg).unwrap();
        t.check_structure().unwrap();
        assert!(t.core.measure() >= rat(9, 10));
        assert!(t.max_diameter(2) <= rat(1, 4));
    }
}
