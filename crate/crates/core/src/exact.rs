//! Exact solutions for finite-valued mean-zero step functions, with
//! `‖g‖∞ ≤ ‖f‖∞`.

use serde::{Deserialize, Serialize};

use crate::certificate::{norm_ratio, sup_or_zero, BlockKind, BlockRecord, CoboundaryCertificate};
use crate::error::{Error, Result};
use crate::exchange::{ExchangePiece, IntervalExchange};
use crate::function::{HybridFunction, PiecewiseAffine, StepFunction};
use crate::interval::{Interval, IntervalSet};
use crate::rational::Rat;

/// Two disjoint sets carrying opposite values with equal mass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MassPair {
    pub pos_set: IntervalSet,
    pub neg_set: IntervalSet,
    pub pos_value: Rat,
    pub neg_value: Rat,
}

/// Solves `g∘T − g = α` on `A` and `β` on `B` with `T` mapping `A ∪ B` onto
/// itself and `‖g‖∞ ≤ max(|α|, |β|)`.
///
/// `A ∪ B` is packed onto `[0, L)` with `A` first; there `T` is the rotation
/// `t ↦ t − λ(A) mod L` and `g(t) = α/(1 − a) · (t/L − 1/2)`, `a = λ(A)/L`.
pub fn solve_two_level(alpha: &Rat, beta: &Rat, a: &IntervalSet, b: &IntervalSet) -> Result<(IntervalExchange, PiecewiseAffine)> {
    if alpha.is_zero() {
        return Err(Error::Degenerate("α = 0".into()));
    }
    if !a.is_disjoint(b) {
        return Err(Error::Precondition(format!("sets {a} and {b} overlap")));
    }
    let (la, lb) = (a.measure(), b.measure());
    if !la.is_positive() || !lb.is_positive() {
        return Err(Error::Precondition(format!("both sets need positive measure, got {la} and {lb}")));
    }
    let residual = alpha * &la + beta * &lb;
    if !residual.is_zero() {
        return Err(Error::NonzeroSum(residual));
    }
    let l = &la + &lb;
    let pack = IntervalExchange::glue(&[
        IntervalExchange::between(a, &IntervalSet::interval(Rat::zero(), la.clone()))?,
        IntervalExchange::between(b, &IntervalSet::interval(la.clone(), l.clone()))?,
    ])?;
    let rot = IntervalExchange::new(vec![
        ExchangePiece::new(Interval::new(Rat::zero(), la.clone()), Interval::new(lb.clone(), l.clone())),
        ExchangePiece::new(Interval::new(la.clone(), l.clone()), Interval::new(Rat::zero(), lb.clone())),
    ])?;
    // α/(1 − a) = α L / λ(B)
    let k = alpha * &l / &lb;
    let packed_g = PiecewiseAffine::linear(&Interval::new(Rat::zero(), l.clone()), &k / &l, -k.half());
    let t = IntervalExchange::conjugate(&rot, &pack)?;
    let g = packed_g.pull_back(&pack)?;
    Ok((t, g))
}

/// Splits the positive and negative mass of `f` into balanced pairs by a
/// two-pointer sweep over the pieces, left to right.
pub fn pair_positive_negative(f: &StepFunction) -> Result<Vec<MassPair>> {
    let total = f.integral();
    if !total.is_zero() {
        return Err(Error::NonzeroSum(total));
    }
    let pos: Vec<_> = f.pieces().iter().filter(|p| p.value.is_positive()).collect();
    let neg: Vec<_> = f.pieces().iter().filter(|p| p.value.is_negative()).collect();
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut pos_lo = pos.first().map(|p| p.lo.clone()).unwrap_or_default();
    let mut neg_lo = neg.first().map(|p| p.lo.clone()).unwrap_or_default();
    while i < pos.len() && j < neg.len() {
        let (p, n) = (pos[i], neg[j]);
        let w = -&n.value;
        let pos_mass = &p.value * (&p.hi - &pos_lo);
        let neg_mass = &w * (&n.hi - &neg_lo);
        let mass = Rat::min_of(&pos_mass, &neg_mass).clone();
        let pos_hi = &pos_lo + &mass / &p.value;
        let neg_hi = &neg_lo + &mass / &w;
        pairs.push(MassPair {
            pos_set: IntervalSet::interval(pos_lo.clone(), pos_hi.clone()),
            neg_set: IntervalSet::interval(neg_lo.clone(), neg_hi.clone()),
            pos_value: p.value.clone(),
            neg_value: n.value.clone(),
        });
        pos_lo = pos_hi;
        neg_lo = neg_hi;
        if pos_lo == p.hi {
            i += 1;
            if let Some(q) = pos.get(i) {
                pos_lo = q.lo.clone();
            }
        }
        if neg_lo == n.hi {
            j += 1;
            if let Some(q) = neg.get(j) {
                neg_lo = q.lo.clone();
            }
        }
    }
    if i < pos.len() || j < neg.len() {
        return Err(Error::Invariant("unpaired mass left after the sweep".into()));
    }
    Ok(pairs)
}

/// `T` and `g` for a mean-zero step function; `T` is the identity and `g = 0`
/// where `f = 0`.
pub fn solve_step_parts(f: &StepFunction) -> Result<(IntervalExchange, PiecewiseAffine)> {
    let pairs = pair_positive_negative(f)?;
    let mut ts = Vec::with_capacity(pairs.len() + 1);
    let mut gs = Vec::with_capacity(pairs.len() + 1);
    let mut covered = IntervalSet::empty();
    for pair in &pairs {
        let (t, g) = solve_two_level(&pair.pos_value, &pair.neg_value, &pair.pos_set, &pair.neg_set)?;
        covered = covered.union(&pair.pos_set).union(&pair.neg_set);
        ts.push(t);
        gs.push(g);
    }
    let rest = f.domain().difference(&covered);
    ts.push(IntervalExchange::identity(&rest));
    let mut g = PiecewiseAffine::zero(&rest);
    for part in &gs {
        g = g.glue(part)?;
    }
    Ok((IntervalExchange::glue(&ts)?, g))
}

pub fn solve_step(f: &StepFunction) -> Result<CoboundaryCertificate> {
    let (t, g) = solve_step_parts(f)?;
    let norm_f = f.sup_norm().unwrap_or_default();
    let norm_g = sup_or_zero(&g);
    if norm_g > norm_f {
        return Err(Error::Invariant(format!("‖g‖ = {norm_g} exceeds ‖f‖ = {norm_f}")));
    }
    let domain = f.domain();
    Ok(CoboundaryCertificate {
        f: HybridFunction::from_step(f.clone()),
        t,
        g,
        eps: Rat::zero(),
        exact: true,
        residual_bound: Rat::zero(),
        representation_error: Rat::zero(),
        norm_ratio: norm_ratio(&norm_g, &norm_f),
        converged: true,
        blocks: vec![BlockRecord {
            name: "C".into(),
            kind: BlockKind::Step,
            set: domain,
            residual: Rat::zero(),
            norm_f,
            norm_g,
            converged: true,
            notes: Vec::new(),
        }],
        stage_ledger: None,
        notes: Vec::new(),
    })
}
