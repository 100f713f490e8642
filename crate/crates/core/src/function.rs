//! Step, piecewise-affine, sampled and hybrid functions over interval sets.
//!
//! Every integrand the solvers touch is ultimately a [`PiecewiseAffine`]:
//! step functions embed as slope-zero pieces and sampled functions are
//! represented by their linear interpolant, so integrals stay exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::IntervalExchange;
use crate::interval::{Interval, IntervalSet};
use crate::rational::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepPiece {
    pub lo: Rat,
    pub hi: Rat,
    pub value: Rat,
}

impl StepPiece {
    pub fn new(lo: Rat, hi: Rat, value: Rat) -> StepPiece {
        StepPiece { lo, hi, value }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo.clone(), self.hi.clone())
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// A piecewise-constant function in canonical form: pieces sorted, disjoint,
/// nonempty, and touching pieces with equal values merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepFunction {
    pieces: Vec<StepPiece>,
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pieces: Vec<StepPiece>,
        }
        let raw = Raw::deserialize(d)?;
        StepFunction::new(raw.pieces).map_err(serde::de::Error::custom)
    }
}

fn check_disjoint<T>(items: &[T], lo: impl Fn(&T) -> &Rat, hi: impl Fn(&T) -> &Rat) -> Result<()> {
    for it in items {
        if lo(it) > hi(it) {
            return Err(Error::Malformed(format!("piece [{}, {}) has lo > hi", lo(it), hi(it))));
        }
    }
    for w in items.windows(2) {
        if hi(&w[0]) > lo(&w[1]) {
            return Err(Error::Malformed(format!(
                "pieces [{}, {}) and [{}, {}) overlap",
                lo(&w[0]),
                hi(&w[0]),
                lo(&w[1]),
                hi(&w[1])
            )));
        }
    }
    Ok(())
}

impl StepFunction {
    /// Validates and canonicalizes. Pieces may be given in any order but
    /// must not overlap.
    pub fn new(mut pieces: Vec<StepPiece>) -> Result<StepFunction> {
        pieces.retain(|p| p.lo != p.hi);
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        check_disjoint(&pieces, |p| &p.lo, |p| &p.hi)?;
        Ok(StepFunction::canonical(pieces))
    }

    fn canonical(pieces: Vec<StepPiece>) -> StepFunction {
        let mut out: Vec<StepPiece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if p.lo == p.hi {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if last.hi == p.lo && last.value == p.value {
                    last.hi = p.hi;
                    continue;
                }
            }
            out.push(p);
        }
        StepFunction { pieces: out }
    }

    pub fn from_values(pieces: Vec<(Interval, Rat)>) -> Result<StepFunction> {
        StepFunction::new(pieces.into_iter().map(|(iv, v)| StepPiece::new(iv.lo, iv.hi, v)).collect())
    }

    pub fn constant(domain: &IntervalSet, value: Rat) -> StepFunction {
        StepFunction::canonical(
            domain
                .pieces()
                .iter()
                .map(|p| StepPiece::new(p.lo.clone(), p.hi.clone(), value.clone()))
                .collect(),
        )
    }

    pub fn zero(domain: &IntervalSet) -> StepFunction {
        StepFunction::constant(domain, Rat::zero())
    }

    pub fn pieces(&self) -> &[StepPiece] {
        &self.pieces
    }

    pub fn domain(&self) -> IntervalSet {
        IntervalSet::new(self.pieces.iter().map(|p| p.interval()).collect())
    }

    pub fn value_at(&self, x: &Rat) -> Option<&Rat> {
        let idx = self.pieces.partition_point(|p| &p.lo <= x);
        let p = &self.pieces[idx.checked_sub(1)?];
        (x < &p.hi).then_some(&p.value)
    }

    /// Exact `∫_S f`. Errors if `S` is not inside the domain.
    pub fn integrate(&self, s: &IntervalSet) -> Result<Rat> {
        self.to_affine().integrate(s)
    }

    pub fn integral(&self) -> Rat {
        self.pieces.iter().map(|p| &p.value * &p.length()).sum()
    }

    /// Exact essential supremum of `|f|`.
    pub fn sup_norm(&self) -> Result<Rat> {
        self.pieces
            .iter()
            .map(|p| p.value.abs())
            .max()
            .ok_or_else(|| Error::Degenerate("sup norm of a function with empty domain".into()))
    }

    pub fn max_value(&self) -> Option<&Rat> {
        self.pieces.iter().map(|p| &p.value).max()
    }

    pub fn min_value(&self) -> Option<&Rat> {
        self.pieces.iter().map(|p| &p.value).min()
    }

    /// Level sets of positive measure, keyed by value.
    pub fn atoms(&self) -> BTreeMap<Rat, IntervalSet> {
        let mut by_value: BTreeMap<Rat, Vec<Interval>> = BTreeMap::new();
        for p in &self.pieces {
            by_value.entry(p.value.clone()).or_default().push(p.interval());
        }
        by_value.into_iter().map(|(v, ivs)| (v, IntervalSet::new(ivs))).collect()
    }

    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut pts: Vec<Rat> = self.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect();
        pts.dedup();
        pts
    }

    /// `{x : pred(f(x))}`.
    pub fn level_set(&self, pred: impl Fn(&Rat) -> bool) -> IntervalSet {
        IntervalSet::new(self.pieces.iter().filter(|p| pred(&p.value)).map(|p| p.interval()).collect())
    }

    /// Restriction to `S ∩ domain`.
    pub fn restrict(&self, s: &IntervalSet) -> StepFunction {
        let mut out = Vec::new();
        let sp = s.pieces();
        let mut j = 0;
        for p in &self.pieces {
            while j < sp.len() && sp[j].hi <= p.lo {
                j += 1;
            }
            let mut k = j;
            while k < sp.len() && sp[k].lo < p.hi {
                if let Some(c) = p.interval().intersect(&sp[k]) {
                    out.push(StepPiece::new(c.lo, c.hi, p.value.clone()));
                }
                k += 1;
            }
        }
        StepFunction::canonical(out)
    }

    pub fn map_values(&self, f: impl Fn(&Rat) -> Rat) -> StepFunction {
        StepFunction::canonical(
            self.pieces
                .iter()
                .map(|p| StepPiece::new(p.lo.clone(), p.hi.clone(), f(&p.value)))
                .collect(),
        )
    }

    pub fn neg(&self) -> StepFunction {
        self.map_values(|v| -v)
    }

    pub fn scale(&self, c: &Rat) -> StepFunction {
        self.map_values(|v| v * c)
    }

    pub fn add_constant(&self, c: &Rat) -> StepFunction {
        self.map_values(|v| v + c)
    }

    /// Pointwise sum on the common domain; domains must agree.
    pub fn add(&self, other: &StepFunction) -> Result<StepFunction> {
        let a = self.to_affine().add(&other.to_affine())?;
        a.to_step()
            .ok_or_else(|| Error::Invariant("sum of step functions is not a step function".into()))
    }

    pub fn sub(&self, other: &StepFunction) -> Result<StepFunction> {
        self.add(&other.neg())
    }

    /// Union of two step functions with disjoint domains.
    pub fn glue(&self, other: &StepFunction) -> Result<StepFunction> {
        let mut all = self.pieces.clone();
        all.extend(other.pieces.iter().cloned());
        StepFunction::new(all)
    }

    pub fn to_affine(&self) -> PiecewiseAffine {
        PiecewiseAffine::canonical(
            self.pieces
                .iter()
                .map(|p| AffinePiece::new(p.lo.clone(), p.hi.clone(), Rat::zero(), p.value.clone()))
                .collect(),
        )
    }
}

/// One affine piece `x ↦ slope·x + intercept` on `[lo, hi)`, in absolute
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub lo: Rat,
    pub hi: Rat,
    pub slope: Rat,
    pub intercept: Rat,
}

impl AffinePiece {
    pub fn new(lo: Rat, hi: Rat, slope: Rat, intercept: Rat) -> AffinePiece {
        AffinePiece { lo, hi, slope, intercept }
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        &self.slope * x + &self.intercept
    }

    pub fn at_lo(&self) -> Rat {
        self.eval(&self.lo)
    }

    /// Left limit at `hi`.
    pub fn at_hi(&self) -> Rat {
        self.eval(&self.hi)
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo.clone(), self.hi.clone())
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    /// `∫_a^b (s x + c) dx` for `[a, b) ⊆ [lo, hi)`.
    pub fn integral_over(&self, a: &Rat, b: &Rat) -> Rat {
        let two = Rat::from_int(2);
        &self.slope * &(b * b - a * a) / &two + &self.intercept * &(b - a)
    }

    pub fn integral(&self) -> Rat {
        self.integral_over(&self.lo, &self.hi)
    }

    fn same_formula(&self, other: &AffinePiece) -> bool {
        self.slope == other.slope && self.intercept == other.intercept
    }

    fn sub_piece(&self, lo: Rat, hi: Rat) -> AffinePiece {
        AffinePiece::new(lo, hi, self.slope.clone(), self.intercept.clone())
    }
}

/// Comparison used to carve level sets out of a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Cmp {
    fn holds(self, v: &Rat, c: &Rat) -> bool {
        match self {
            Cmp::Gt => v > c,
            Cmp::Ge => v >= c,
            Cmp::Lt => v < c,
            Cmp::Le => v <= c,
        }
    }
}

/// A piecewise-affine function in canonical form: pieces sorted, disjoint,
/// nonempty, touching pieces with identical formulas merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PiecewiseAffine {
    pieces: Vec<AffinePiece>,
}

impl<'de> Deserialize<'de> for PiecewiseAffine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pieces: Vec<AffinePiece>,
        }
        let raw = Raw::deserialize(d)?;
        PiecewiseAffine::new(raw.pieces).map_err(serde::de::Error::custom)
    }
}

impl PiecewiseAffine {
    pub fn new(mut pieces: Vec<AffinePiece>) -> Result<PiecewiseAffine> {
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        check_disjoint(&pieces, |p| &p.lo, |p| &p.hi)?;
        Ok(PiecewiseAffine::canonical(pieces))
    }

    pub(crate) fn canonical(pieces: Vec<AffinePiece>) -> PiecewiseAffine {
        let mut out: Vec<AffinePiece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if p.lo == p.hi {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if last.hi == p.lo && last.same_formula(&p) {
                    last.hi = p.hi;
                    continue;
                }
            }
            out.push(p);
        }
        PiecewiseAffine { pieces: out }
    }

    pub fn constant(domain: &IntervalSet, value: Rat) -> PiecewiseAffine {
        StepFunction::constant(domain, value).to_affine()
    }

    pub fn zero(domain: &IntervalSet) -> PiecewiseAffine {
        PiecewiseAffine::constant(domain, Rat::zero())
    }

    /// `x ↦ slope·x + intercept` on a single interval.
    pub fn linear(iv: &Interval, slope: Rat, intercept: Rat) -> PiecewiseAffine {
        PiecewiseAffine::canonical(vec![AffinePiece::new(iv.lo.clone(), iv.hi.clone(), slope, intercept)])
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn domain(&self) -> IntervalSet {
        IntervalSet::new(self.pieces.iter().map(|p| p.interval()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    fn locate(&self, x: &Rat) -> Option<usize> {
        let idx = self.pieces.partition_point(|p| &p.lo <= x);
        let i = idx.checked_sub(1)?;
        (x < &self.pieces[i].hi).then_some(i)
    }

    pub fn piece_at(&self, x: &Rat) -> Option<&AffinePiece> {
        self.locate(x).map(|i| &self.pieces[i])
    }

    pub fn value_at(&self, x: &Rat) -> Option<Rat> {
        self.piece_at(x).map(|p| p.eval(x))
    }

    /// Indices of the pieces meeting `[lo, hi)`.
    fn range(&self, lo: &Rat, hi: &Rat) -> std::ops::Range<usize> {
        let start = self.pieces.partition_point(|p| &p.hi <= lo);
        let end = self.pieces.partition_point(|p| &p.lo < hi);
        start..end.max(start)
    }

    /// Exact `∫_S f`. Errors if `S` is not inside the domain.
    pub fn integrate(&self, s: &IntervalSet) -> Result<Rat> {
        let mut total = Rat::zero();
        for iv in s.pieces() {
            let mut covered = Rat::zero();
            for p in &self.pieces[self.range(&iv.lo, &iv.hi)] {
                let a = Rat::max_of(&p.lo, &iv.lo);
                let b = Rat::min_of(&p.hi, &iv.hi);
                if a < b {
                    covered += b - a;
                    total += p.integral_over(a, b);
                }
            }
            if covered != iv.length() {
                return Err(Error::DomainMismatch(format!(
                    "integration set piece {iv} is not inside the function's domain"
                )));
            }
        }
        Ok(total)
    }

    pub fn integral(&self) -> Rat {
        self.pieces.iter().map(|p| p.integral()).sum()
    }

    /// Exact essential supremum of `|f|` (closure endpoints of each piece).
    pub fn sup_norm(&self) -> Result<Rat> {
        self.pieces
            .iter()
            .map(|p| Rat::max_of(&p.at_lo().abs(), &p.at_hi().abs()).clone())
            .max()
            .ok_or_else(|| Error::Degenerate("sup norm of a function with empty domain".into()))
    }

    /// Essential supremum of `f` over `S ∩ domain`.
    pub fn max_on(&self, s: &IntervalSet) -> Option<Rat> {
        self.extreme_on(s, true)
    }

    /// Essential infimum of `f` over `S ∩ domain`.
    pub fn min_on(&self, s: &IntervalSet) -> Option<Rat> {
        self.extreme_on(s, false)
    }

    fn extreme_on(&self, s: &IntervalSet, want_max: bool) -> Option<Rat> {
        let mut best: Option<Rat> = None;
        for iv in s.pieces() {
            for p in &self.pieces[self.range(&iv.lo, &iv.hi)] {
                let a = Rat::max_of(&p.lo, &iv.lo);
                let b = Rat::min_of(&p.hi, &iv.hi);
                if a >= b {
                    continue;
                }
                for v in [p.eval(a), p.eval(b)] {
                    best = Some(match best {
                        None => v,
                        Some(cur) => {
                            if (want_max && v > cur) || (!want_max && v < cur) {
                                v
                            } else {
                                cur
                            }
                        }
                    });
                }
            }
        }
        best
    }

    pub fn max_value(&self) -> Option<Rat> {
        self.max_on(&self.domain())
    }

    pub fn min_value(&self) -> Option<Rat> {
        self.min_on(&self.domain())
    }

    /// `{x : f(x) cmp c}` up to finitely many points.
    pub fn level_set(&self, cmp: Cmp, c: &Rat) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.pieces {
            if p.slope.is_zero() {
                if cmp.holds(&p.intercept, c) {
                    out.push(p.interval());
                }
                continue;
            }
            // Crossing point of s x + b = c.
            let r = (c - &p.intercept) / &p.slope;
            let increasing = p.slope.is_positive();
            let above = matches!(cmp, Cmp::Gt | Cmp::Ge);
            let (lo, hi) = if increasing == above {
                (Rat::max_of(&p.lo, &r).clone(), p.hi.clone())
            } else {
                (p.lo.clone(), Rat::min_of(&p.hi, &r).clone())
            };
            if lo < hi {
                out.push(Interval::new(lo, hi));
            }
        }
        IntervalSet::new(out)
    }

    /// Restriction to `S ∩ domain`.
    pub fn restrict(&self, s: &IntervalSet) -> PiecewiseAffine {
        let mut out = Vec::new();
        for iv in s.pieces() {
            for p in &self.pieces[self.range(&iv.lo, &iv.hi)] {
                let a = Rat::max_of(&p.lo, &iv.lo);
                let b = Rat::min_of(&p.hi, &iv.hi);
                if a < b {
                    out.push(p.sub_piece(a.clone(), b.clone()));
                }
            }
        }
        PiecewiseAffine::canonical(out)
    }

    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut pts: Vec<Rat> = self.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect();
        pts.dedup();
        pts
    }

    /// Interior points where the function jumps (including the ends of
    /// gaps in the domain).
    pub fn jump_points(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for w in self.pieces.windows(2) {
            if w[0].hi != w[1].lo {
                out.push(w[0].hi.clone());
                out.push(w[1].lo.clone());
            } else if w[0].at_hi() != w[1].at_lo() {
                out.push(w[0].hi.clone());
            }
        }
        out
    }

    pub fn map_pieces(&self, f: impl Fn(&AffinePiece) -> (Rat, Rat)) -> PiecewiseAffine {
        PiecewiseAffine::canonical(
            self.pieces
                .iter()
                .map(|p| {
                    let (s, c) = f(p);
                    p.sub_piece(p.lo.clone(), p.hi.clone()).with_formula(s, c)
                })
                .collect(),
        )
    }

    pub fn neg(&self) -> PiecewiseAffine {
        self.map_pieces(|p| (-&p.slope, -&p.intercept))
    }

    pub fn scale(&self, k: &Rat) -> PiecewiseAffine {
        self.map_pieces(|p| (&p.slope * k, &p.intercept * k))
    }

    pub fn add_constant(&self, k: &Rat) -> PiecewiseAffine {
        self.map_pieces(|p| (p.slope.clone(), &p.intercept + k))
    }

    /// Pointwise sum; the two domains must be equal.
    pub fn add(&self, other: &PiecewiseAffine) -> Result<PiecewiseAffine> {
        if self.domain() != other.domain() {
            return Err(Error::DomainMismatch(format!(
                "cannot add functions on {} and {}",
                self.domain(),
                other.domain()
            )));
        }
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let a = &self.pieces[i];
            let b = &other.pieces[j];
            let lo = Rat::max_of(&a.lo, &b.lo);
            let hi = Rat::min_of(&a.hi, &b.hi);
            if lo < hi {
                out.push(AffinePiece::new(
                    lo.clone(),
                    hi.clone(),
                    &a.slope + &b.slope,
                    &a.intercept + &b.intercept,
                ));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(PiecewiseAffine::canonical(out))
    }

    pub fn sub(&self, other: &PiecewiseAffine) -> Result<PiecewiseAffine> {
        self.add(&other.neg())
    }

    /// Union of two functions with disjoint domains.
    pub fn glue(&self, other: &PiecewiseAffine) -> Result<PiecewiseAffine> {
        let mut all = self.pieces.clone();
        all.extend(other.pieces.iter().cloned());
        PiecewiseAffine::new(all)
    }

    /// `x ↦ f(T x)` on the domain of `T`. Every target of `T` must lie in
    /// the domain of `f`.
    pub fn pull_back(&self, t: &IntervalExchange) -> Result<PiecewiseAffine> {
        let mut out = Vec::new();
        for piece in t.pieces() {
            let d = piece.shift();
            let dst = &piece.dst;
            let mut covered = Rat::zero();
            for p in &self.pieces[self.range(&dst.lo, &dst.hi)] {
                let a = Rat::max_of(&p.lo, &dst.lo);
                let b = Rat::min_of(&p.hi, &dst.hi);
                if a >= b {
                    continue;
                }
                covered += b - a;
                // f(x + d) = s x + (s d + c)
                out.push(AffinePiece::new(a - &d, b - &d, p.slope.clone(), &p.slope * &d + &p.intercept));
            }
            if covered != dst.length() {
                return Err(Error::DomainMismatch(format!(
                    "target {} of the exchange leaves the function's domain",
                    dst
                )));
            }
        }
        PiecewiseAffine::new(out)
    }

    pub fn is_step(&self) -> bool {
        self.pieces.iter().all(|p| p.slope.is_zero())
    }

    pub fn to_step(&self) -> Option<StepFunction> {
        if !self.is_step() {
            return None;
        }
        Some(StepFunction::canonical(
            self.pieces
                .iter()
                .map(|p| StepPiece::new(p.lo.clone(), p.hi.clone(), p.intercept.clone()))
                .collect(),
        ))
    }

    /// `max(sup − avg, avg − inf)` of `f` over `S`, the distance from `f` to
    /// its average on `S` in sup norm.
    pub fn deviation_from_mean(&self, s: &IntervalSet) -> Result<Rat> {
        let m = s.measure();
        if m.is_zero() {
            return Ok(Rat::zero());
        }
        let avg = self.integrate(s)? / &m;
        let hi = self.max_on(s).unwrap_or_else(|| avg.clone());
        let lo = self.min_on(s).unwrap_or_else(|| avg.clone());
        Ok(Rat::max_of(&(&hi - &avg), &(&avg - &lo)).clone())
    }
}

impl AffinePiece {
    fn with_formula(mut self, slope: Rat, intercept: Rat) -> AffinePiece {
        self.slope = slope;
        self.intercept = intercept;
        self
    }
}

impl From<&StepFunction> for PiecewiseAffine {
    fn from(f: &StepFunction) -> PiecewiseAffine {
        f.to_affine()
    }
}

/// Values on a rational grid plus a declared Lipschitz modulus
/// `ω(h) = lipschitz · h`. Between grid points the function is represented by
/// its linear interpolant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub grid: Vec<Rat>,
    pub values: Vec<Rat>,
    pub lipschitz: Rat,
}

impl SampledFunction {
    pub fn new(grid: Vec<Rat>, values: Vec<Rat>, lipschitz: Rat) -> Result<SampledFunction> {
        let s = SampledFunction { grid, values, lipschitz };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.values.len() {
            return Err(Error::Malformed(format!(
                "sampled function has {} grid points but {} values",
                self.grid.len(),
                self.values.len()
            )));
        }
        if self.grid.len() < 2 {
            return Err(Error::Malformed("sampled function needs at least two grid points".into()));
        }
        if let Some(w) = self.grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Malformed(format!("grid is not strictly increasing at {} >= {}", w[0], w[1])));
        }
        if self.lipschitz.is_negative() {
            return Err(Error::Malformed("negative Lipschitz constant".into()));
        }
        Ok(())
    }

    /// Samples `f` on `n + 1` equispaced points of `[lo, hi]`.
    pub fn from_fn(lo: &Rat, hi: &Rat, n: usize, lipschitz: Rat, f: impl Fn(&Rat) -> Rat) -> Result<SampledFunction> {
        let step = (hi - lo) / Rat::from_int(n as i64);
        let grid: Vec<Rat> = (0..=n).map(|i| lo + &step * &Rat::from_int(i as i64)).collect();
        let values = grid.iter().map(&f).collect();
        SampledFunction::new(grid, values, lipschitz)
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.grid[0].clone(), self.grid[self.grid.len() - 1].clone())
    }

    pub fn max_spacing(&self) -> Rat {
        self.grid.windows(2).map(|w| &w[1] - &w[0]).max().unwrap_or_else(Rat::zero)
    }

    /// Declared bound on the oscillation over any interval of length `h`.
    pub fn oscillation_bound(&self, h: &Rat) -> Rat {
        &self.lipschitz * h
    }

    /// Bound on `|f − interpolant|` anywhere on the support.
    pub fn interpolation_error_bound(&self) -> Rat {
        self.oscillation_bound(&self.max_spacing())
    }

    pub fn interpolant(&self) -> PiecewiseAffine {
        let pieces = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| {
                let slope = (&y[1] - &y[0]) / (&x[1] - &x[0]);
                let intercept = &y[0] - &slope * &x[0];
                AffinePiece::new(x[0].clone(), x[1].clone(), slope, intercept)
            })
            .collect();
        PiecewiseAffine::canonical(pieces)
    }

    pub fn neg(&self) -> SampledFunction {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
            lipschitz: self.lipschitz.clone(),
        }
    }

    pub fn scale(&self, k: &Rat) -> SampledFunction {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            lipschitz: &self.lipschitz * &k.abs(),
        }
    }
}

/// `f = step_part + sampled_part` on `domain`; the sampled part contributes
/// zero outside its support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridFunction {
    pub domain: IntervalSet,
    pub step_part: StepFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_part: Option<SampledFunction>,
}

impl HybridFunction {
    /// The step part is zero-filled to the whole domain.
    pub fn new(domain: IntervalSet, step_part: StepFunction, sampled_part: Option<SampledFunction>) -> Result<HybridFunction> {
        let step_dom = step_part.domain();
        if !step_dom.is_subset(&domain) {
            return Err(Error::DomainMismatch(format!("step part domain {step_dom} is not inside {domain}")));
        }
        if let Some(s) = &sampled_part {
            s.validate()?;
            if !domain.contains_interval(&s.support()) {
                return Err(Error::DomainMismatch(format!(
                    "sampled support {} is not inside {domain}",
                    s.support()
                )));
            }
        }
        let filler = StepFunction::zero(&domain.difference(&step_dom));
        let step_part = step_part.glue(&filler)?;
        Ok(HybridFunction {
            domain,
            step_part,
            sampled_part,
        })
    }

    pub fn from_step(f: StepFunction) -> HybridFunction {
        HybridFunction {
            domain: f.domain(),
            step_part: f,
            sampled_part: None,
        }
    }

    pub fn from_sampled(s: SampledFunction) -> Result<HybridFunction> {
        let domain = IntervalSet::from(s.support());
        HybridFunction::new(domain.clone(), StepFunction::zero(&domain), Some(s))
    }

    pub fn is_step(&self) -> bool {
        self.sampled_part.is_none()
    }

    pub fn sampled_support(&self) -> IntervalSet {
        self.sampled_part
            .as_ref()
            .map(|s| IntervalSet::from(s.support()))
            .unwrap_or_default()
    }

    /// The exact piecewise-affine function every solver works with.
    pub fn surrogate(&self) -> PiecewiseAffine {
        let step = self.step_part.to_affine();
        match &self.sampled_part {
            None => step,
            Some(s) => {
                let interp = s.interpolant();
                let rest = PiecewiseAffine::zero(&self.domain.difference(&interp.domain()));
                let extended = interp.glue(&rest).expect("disjoint by construction");
                step.add(&extended).expect("same domain by construction")
            }
        }
    }

    /// Bound on `|f − surrogate|` from the declared modulus.
    pub fn surrogate_error_bound(&self) -> Rat {
        self.sampled_part
            .as_ref()
            .map(|s| s.interpolation_error_bound())
            .unwrap_or_else(Rat::zero)
    }

    pub fn neg(&self) -> HybridFunction {
        HybridFunction {
            domain: self.domain.clone(),
            step_part: self.step_part.neg(),
            sampled_part: self.sampled_part.as_ref().map(|s| s.neg()),
        }
    }

    pub fn scale(&self, k: &Rat) -> HybridFunction {
        HybridFunction {
            domain: self.domain.clone(),
            step_part: self.step_part.scale(k),
            sampled_part: self.sampled_part.as_ref().map(|s| s.scale(k)),
        }
    }

    pub fn value_at(&self, x: &Rat) -> Option<Rat> {
        self.surrogate().value_at(x)
    }
}

/// Sorted, deduplicated union of breakpoint sets. Consecutive pairs are the
/// atoms of the common refinement.
pub fn common_refinement<I, S>(sources: I) -> Vec<Rat>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = Rat>,
{
    let mut all: Vec<Rat> = sources.into_iter().flatten().collect();
    all.sort();
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::set_of;
    use crate::interval::Frac;
    use crate::rational::rat;

    fn step(pieces: &[(Frac, Frac, Frac)]) -> StepFunction {
        StepFunction::new(
            pieces
                .iter()
                .map(|&(a, b, v)| StepPiece::new(rat(a.0, a.1), rat(b.0, b.1), rat(v.0, v.1)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn integrate_examples() {
        let f = step(&[((0, 1), (1, 3), (2, 3)), ((1, 3), (1, 1), (-1, 3))]);
        assert_eq!(f.integrate(&IntervalSet::unit()).unwrap(), Rat::zero());
        assert_eq!(f.integrate(&IntervalSet::empty()).unwrap(), Rat::zero());
        let g = step(&[((0, 1), (1, 2), (1, 1)), ((1, 2), (1, 1), (0, 1))]);
        assert_eq!(g.integrate(&set_of(&[((1, 4), (3, 4))])).unwrap(), rat(1, 4));
        assert!(matches!(g.integrate(&set_of(&[((1, 2), (3, 2))])), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn sup_norm_examples() {
        let f = step(&[((0, 1), (1, 3), (2, 3)), ((1, 3), (1, 1), (-1, 3))]);
        assert_eq!(f.sup_norm().unwrap(), rat(2, 3));
        let g = PiecewiseAffine::linear(&Interval::unit(), Rat::one(), rat(-1, 2));
        assert_eq!(g.sup_norm().unwrap(), rat(1, 2));
        assert_eq!(StepFunction::zero(&IntervalSet::unit()).sup_norm().unwrap(), Rat::zero());
        assert!(StepFunction::new(vec![]).unwrap().sup_norm().is_err());
    }

    #[test]
    fn atoms_examples() {
        let f = step(&[((0, 1), (1, 4), (3, 4)), ((1, 4), (1, 1), (-1, 4))]);
        let a = f.atoms();
        assert_eq!(a[&rat(3, 4)], set_of(&[((0, 1), (1, 4))]));
        assert_eq!(a[&rat(-1, 4)], set_of(&[((1, 4), (1, 1))]));
        let g = step(&[
            ((0, 1), (1, 4), (1, 1)),
            ((1, 4), (1, 2), (0, 1)),
            ((1, 2), (3, 4), (1, 1)),
            ((3, 4), (1, 1), (0, 1)),
        ]);
        assert_eq!(g.atoms()[&Rat::one()], set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))]));
    }

    #[test]
    fn refinement_examples() {
        let r = common_refinement(vec![vec![rat(0, 1), rat(1, 3), rat(1, 1)], vec![rat(0, 1), rat(1, 2), rat(1, 1)]]);
        assert_eq!(r, vec![rat(0, 1), rat(1, 3), rat(1, 2), rat(1, 1)]);
        let d = common_refinement(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(0, 1), rat(1, 1)]]);
        assert_eq!(d, vec![rat(0, 1), rat(1, 1)]);
    }

    #[test]
    fn canonical_merge() {
        let f = step(&[((0, 1), (1, 2), (1, 1)), ((1, 2), (1, 1), (1, 1))]);
        assert_eq!(f.pieces().len(), 1);
        assert!(StepFunction::new(vec![
            StepPiece::new(rat(0, 1), rat(1, 2), rat(1, 1)),
            StepPiece::new(rat(1, 4), rat(1, 1), rat(1, 1)),
        ])
        .is_err());
    }

    #[test]
    fn affine_level_sets_and_extremes() {
        let g = PiecewiseAffine::linear(&Interval::unit(), Rat::one(), rat(-1, 2));
        assert_eq!(g.level_set(Cmp::Gt, &Rat::zero()), set_of(&[((1, 2), (1, 1))]));
        assert_eq!(g.level_set(Cmp::Lt, &rat(1, 4)), set_of(&[((0, 1), (3, 4))]));
        let s = set_of(&[((0, 1), (1, 4))]);
        assert_eq!(g.max_on(&s), Some(rat(-1, 4)));
        assert_eq!(g.min_on(&s), Some(rat(-1, 2)));
        assert_eq!(g.integrate(&s).unwrap(), rat(-3, 32));
        assert_eq!(g.deviation_from_mean(&IntervalSet::unit()).unwrap(), rat(1, 2));
    }

    #[test]
    fn sampled_interpolant_merges_collinear() {
        let s = SampledFunction::from_fn(&Rat::zero(), &Rat::one(), 64, Rat::one(), |t| t - rat(1, 2)).unwrap();
        let i = s.interpolant();
        assert_eq!(i.pieces().len(), 1);
        assert_eq!(i.integral(), Rat::zero());
        assert_eq!(s.max_spacing(), rat(1, 64));
    }

    #[test]
    fn hybrid_surrogate() {
        let step = step(&[((0, 1), (1, 4), (1, 2)), ((1, 4), (1, 2), (-1, 2))]);
        let s = SampledFunction::from_fn(&rat(1, 2), &Rat::one(), 8, Rat::one(), |t| t - rat(3, 4)).unwrap();
        let h = HybridFunction::new(IntervalSet::unit(), step, Some(s)).unwrap();
        let f = h.surrogate();
        assert_eq!(f.domain(), IntervalSet::unit());
        assert_eq!(f.integral(), Rat::zero());
        assert_eq!(f.value_at(&rat(7, 8)), Some(rat(1, 8)));
        assert_eq!(f.value_at(&rat(1, 8)), Some(rat(1, 2)));
    }
}
