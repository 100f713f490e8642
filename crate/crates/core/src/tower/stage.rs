//! One stage of the tower solver: a cyclic exchange of the cells at one
//! level and a step function `g` with `g∘T − g = h` on those cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::IntervalExchange;
use crate::function::{StepFunction, StepPiece};
use crate::interval::IntervalSet;
use crate::rational::Rat;
use crate::rearrange::{rearrange_matrix, rearrange_zero_sum, Permutation, Tier};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverStage {
    pub k: usize,
    pub level: usize,
    /// Cell indices in the order `T` visits them; the last maps to the first.
    pub cycle: Vec<usize>,
    pub t: IntervalExchange,
    pub g: StepFunction,
    pub h: StepFunction,
    /// Row permutations from the matrix step (empty for the base stage).
    pub row_permutations: Vec<Permutation>,
    pub column_order: Option<Permutation>,
    pub tiers: Vec<Tier>,
    pub norm_g: Rat,
    pub norm_h: Rat,
}

fn step_on_cells(cells: &[IntervalSet], values: &[Rat]) -> Result<StepFunction> {
    let mut pieces = Vec::new();
    for (c, v) in cells.iter().zip(values) {
        for iv in c.pieces() {
            pieces.push(StepPiece::new(iv.lo.clone(), iv.hi.clone(), v.clone()));
        }
    }
    StepFunction::new(pieces)
}

/// Exchange sending `cells[cycle[l]]` onto `cells[cycle[l + 1]]`, cyclically,
/// and `g` with `g(cycle[l]) = h(cycle[0]) + … + h(cycle[l − 1])`.
fn assemble(k: usize, level: usize, cells: &[IntervalSet], values: &[Rat], cycle: Vec<usize>) -> Result<SolverStage> {
    let n = cycle.len();
    let mut parts = Vec::with_capacity(n);
    let mut g_values = vec![Rat::zero(); cells.len()];
    let mut acc = Rat::zero();
    for l in 0..n {
        let (from, to) = (cycle[l], cycle[(l + 1) % n]);
        parts.push(IntervalExchange::between(&cells[from], &cells[to])?);
        g_values[from] = acc.clone();
        acc += &values[from];
    }
    if !acc.is_zero() {
        return Err(Error::NonzeroSum(acc));
    }
    let t = IntervalExchange::glue(&parts)?;
    let g = step_on_cells(cells, &g_values)?;
    let h = step_on_cells(cells, values)?;
    Ok(SolverStage {
        k,
        level,
        cycle,
        t,
        norm_g: g.sup_norm().unwrap_or_default(),
        norm_h: h.sup_norm().unwrap_or_default(),
        g,
        h,
        row_permutations: Vec::new(),
        column_order: None,
        tiers: Vec::new(),
    })
}

/// First stage: orders the cells so that the running sums of `values` stay
/// within `max |values|`, then cycles through them in that order.
pub fn base_cycle(level: usize, cells: &[IntervalSet], values: &[Rat]) -> Result<SolverStage> {
    if cells.len() != values.len() {
        return Err(Error::Malformed(format!("{} cells but {} values", cells.len(), values.len())));
    }
    let sigma = rearrange_zero_sum(values)?;
    let cycle = sigma.image().to_vec();
    let mut stage = assemble(0, level, cells, values, cycle)?;
    stage.column_order = Some(sigma);
    Ok(stage)
}

/// Next stage: `cells` refines the cells of `prev`, each parent `p` owning
/// the children `p·r .. (p+1)·r`, and `values` sums to zero over the children
/// of every parent.
///
/// Rows of the matrix are the parents in `prev`'s cycle order. After the row
/// and column rearrangements the new cycle walks down each column in turn, so
/// every child is sent into the image of its parent under the previous
/// exchange.
pub fn extend_cycle(prev: &SolverStage, level: usize, cells: &[IntervalSet], values: &[Rat]) -> Result<SolverStage> {
    let parents = prev.cycle.len();
    if parents == 0 || !cells.len().is_multiple_of(parents) || cells.len() != values.len() {
        return Err(Error::Malformed(format!(
            "{} cells and {} values do not refine {parents} parents",
            cells.len(),
            values.len()
        )));
    }
    let r = cells.len() / parents;
    let rows: Vec<Vec<Rat>> = prev.cycle.iter().map(|&p| values[p * r..(p + 1) * r].to_vec()).collect();
    let matrix = rearrange_matrix(&rows).map_err(|e| e.in_block(format!("stage {}", prev.k + 1)))?;
    let column_sums: Vec<Rat> = (0..r)
        .map(|j| rows.iter().zip(&matrix.permutations).map(|(row, s)| &row[s.image()[j]]).sum())
        .collect();
    let sigma0 = rearrange_zero_sum(&column_sums)?;
    let mut cycle = Vec::with_capacity(cells.len());
    for &j in sigma0.image() {
        for (i, &p) in prev.cycle.iter().enumerate() {
            cycle.push(p * r + matrix.permutations[i].image()[j]);
        }
    }
    let mut stage = assemble(prev.k + 1, level, cells, values, cycle)?;
    stage.row_permutations = matrix.permutations;
    stage.tiers = matrix.tiers;
    stage.column_order = Some(sigma0);
    Ok(stage)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageChecks {
    pub cyclic: bool,
    pub refines_previous: bool,
    pub identity_exact: bool,
    /// `‖g‖ ≤ max|h|` for the base stage, `‖g‖ ≤ 4‖h‖` afterwards.
    pub norm_ok: bool,
}

impl StageChecks {
    pub fn all(&self) -> bool {
        self.cyclic && self.refines_previous && self.identity_exact && self.norm_ok
    }
}

/// Checks a stage against its cells and, when given, the previous stage and
/// its cells.
pub fn check_stage(stage: &SolverStage, cells: &[IntervalSet], prev: Option<(&SolverStage, &[IntervalSet])>) -> Result<StageChecks> {
    let n = stage.cycle.len();
    let mut seen = vec![false; cells.len()];
    let mut cyclic = n == cells.len();
    for l in 0..n {
        let from = stage.cycle[l];
        if from >= cells.len() || std::mem::replace(&mut seen[from], true) {
            cyclic = false;
            break;
        }
        if stage.t.map_set(&cells[from])? != cells[stage.cycle[(l + 1) % n]] {
            cyclic = false;
            break;
        }
    }

    let refines_previous = match prev {
        None => true,
        Some((p, parent_cells)) => {
            let r = cells.len() / parent_cells.len().max(1);
            let mut ok = r > 0 && r * parent_cells.len() == cells.len();
            for (i, c) in cells.iter().enumerate() {
                if !ok {
                    break;
                }
                let image = stage.t.map_set(c)?;
                let parent_image = p.t.map_set(&parent_cells[i / r])?;
                ok = image.is_subset(&parent_image);
            }
            ok
        }
    };

    let g = stage.g.to_affine();
    let identity_exact = g.pull_back(&stage.t)?.sub(&g)? == stage.h.to_affine();

    let limit = if prev.is_none() {
        stage.norm_h.clone()
    } else {
        &stage.norm_h * Rat::from_int(4)
    };
    Ok(StageChecks {
        cyclic,
        refines_previous,
        identity_exact,
        norm_ok: stage.norm_g <= limit,
    })
}
