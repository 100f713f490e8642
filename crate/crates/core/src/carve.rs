//! Carving subsets out of interval unions while keeping `∫ f = 0`.
//!
//! * [`carve_mean_zero`] restores a zero integral after part of a set was
//!   lost, by removing a little of the set where `f` is large.
//! * [`shrink_mean_zero`] removes an exact amount of measure from both ends
//!   so that neither endpoint survives.
//! * [`rational_split`] trims a two-part set so the left share of the measure
//!   becomes a short dyadic.
//! * [`split_half`] combines the two to shrink a set around its midpoint with
//!   an exact left/right ratio.
//!
//! Every operation returns a [`CarveTrace`] with the monotone integral
//! functions it solved against.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Cmp, PiecewiseAffine};
use crate::interval::IntervalSet;
use crate::quadratic::{PiecewiseQuadratic, Root, Side};
use crate::rational::Rat;
use crate::trim::{TrimFamily, TrimKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarveConfig {
    /// Allowed `|∫ f|` when a root is not rational and has to be approximated.
    pub tolerance: Rat,
    /// Largest denominator exponent for the ratio produced by
    /// [`rational_split`]. `None` keeps the set as is: with rational endpoints
    /// the ratio is already rational.
    pub ratio_bits: Option<u64>,
}

impl Default for CarveConfig {
    fn default() -> Self {
        CarveConfig {
            tolerance: Rat::new(1, 1_000_000_000),
            ratio_bits: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarveKind {
    MeanZero,
    Shrink,
    RationalSplit,
    SplitHalf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarveTrace {
    pub kind: CarveKind,
    /// Integral removed from the positive side, by measure removed.
    pub f_plus: PiecewiseQuadratic,
    /// Integral (negated) removed from the negative side, by measure removed.
    pub f_minus: PiecewiseQuadratic,
    /// Samples `(t, H(t))` with `f_minus(H(t)) = f_plus(t)`.
    pub h_table: Vec<(Rat, Rat)>,
    /// Samples `(t, R(t))` of the left share of the measure.
    pub ratio_table: Vec<(Rat, Rat)>,
    pub removed_pos: IntervalSet,
    pub removed_neg: IntervalSet,
    pub t0: Option<Rat>,
    pub r0: Option<Rat>,
    /// The operation ran on `−f`.
    pub sign_flipped: bool,
    pub degenerate: bool,
    /// All roots were rational and found exactly.
    pub exact: bool,
    pub tolerance: Rat,
    /// `∫ f` over the result.
    pub integral_residual: Rat,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<CarveTrace>,
}

impl CarveTrace {
    fn new(kind: CarveKind, cfg: &CarveConfig) -> CarveTrace {
        CarveTrace {
            kind,
            f_plus: PiecewiseQuadratic::default(),
            f_minus: PiecewiseQuadratic::default(),
            h_table: Vec::new(),
            ratio_table: Vec::new(),
            removed_pos: IntervalSet::empty(),
            removed_neg: IntervalSet::empty(),
            t0: None,
            r0: None,
            sign_flipped: false,
            degenerate: false,
            exact: true,
            tolerance: cfg.tolerance.clone(),
            integral_residual: Rat::zero(),
            notes: Vec::new(),
            children: Vec::new(),
        }
    }

    /// Both recorded integral functions are nondecreasing.
    pub fn is_monotone(&self) -> bool {
        self.f_plus.is_nondecreasing() && self.f_minus.is_nondecreasing() && self.children.iter().all(CarveTrace::is_monotone)
    }
}

/// A carved set together with its exact left share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    pub set: IntervalSet,
    /// `λ(E ∩ left part) / λ(E)`.
    pub ratio: Rat,
    pub trace: CarveTrace,
}

impl SplitResult {
    pub fn p(&self) -> &BigInt {
        self.ratio.numer()
    }

    pub fn q(&self) -> &BigInt {
        self.ratio.denom()
    }
}

/// How far `∫_S f` may be from zero: nothing for step functions.
fn allowance(f: &PiecewiseAffine, s: &IntervalSet, cfg: &CarveConfig) -> Rat {
    if f.restrict(s).is_step() {
        Rat::zero()
    } else {
        cfg.tolerance.clone()
    }
}

fn require_mean_zero(f: &PiecewiseAffine, s: &IntervalSet, cfg: &CarveConfig, what: &str) -> Result<Rat> {
    let i = f.integrate(s)?;
    if i.abs() > allowance(f, s, cfg) {
        return Err(Error::Precondition(format!("∫ f over {what} is {i}, expected 0")));
    }
    Ok(i)
}

/// Root tolerance in the trim parameter that keeps integral errors within
/// `cfg.tolerance` (integrals move at rate at most `2‖f‖`).
fn parameter_tolerance(f: &PiecewiseAffine, s: &IntervalSet, cfg: &CarveConfig) -> Rat {
    let norm = f.restrict(s).sup_norm().unwrap_or_default();
    &cfg.tolerance / (Rat::from_int(2) * norm + Rat::one())
}

fn root_on(pq: &PiecewiseQuadratic, lo: &Rat, hi: &Rat, side: Side, tol: &Rat) -> Option<Root> {
    if lo == hi {
        return pq.eval(lo).filter(Rat::is_zero).map(|_| Root {
            x: lo.clone(),
            exact: true,
        });
    }
    pq.restrict(lo, hi).root(side, tol)
}

fn add_constant(pq: &PiecewiseQuadratic, k: &Rat) -> PiecewiseQuadratic {
    pq.map(|p| p.add_constant(k))
}

fn negate(pq: &PiecewiseQuadratic) -> PiecewiseQuadratic {
    pq.map(|p| p.scale(&Rat::from_int(-1)))
}

const TABLE_LIMIT: usize = 64;

/// `(t, H(t))` at the breakpoints of `plus`, `H(t)` the leftmost `s` with
/// `minus(s) = plus(t)`.
fn match_table(plus: &PiecewiseQuadratic, minus: &PiecewiseQuadratic, tol: &Rat) -> Vec<(Rat, Rat)> {
    plus.breakpoints()
        .into_iter()
        .take(TABLE_LIMIT)
        .filter_map(|t| {
            let v = plus.eval(&t)?;
            let s = add_constant(minus, &-v).root(Side::Leftmost, tol)?;
            Some((t, s.x))
        })
        .collect()
}

fn excludes_endpoints(e: &IntervalSet, k: &IntervalSet) -> bool {
    match (e.hull(), k.hull()) {
        (Some(he), Some(hk)) => he.lo > hk.lo && he.hi < hk.hi,
        (None, _) => true,
        _ => false,
    }
}

/// Shrinks `E ⊆ D` (with `λ(E) ≥ λ(D) − ε` and `∫_D f = 0`) to `K ⊆ E` with
/// `∫_K f = 0`, removing measure only where `|f|` exceeds half its maximum on
/// the side of the deficit.
pub fn carve_mean_zero(
    d: &IntervalSet,
    f: &PiecewiseAffine,
    e: &IntervalSet,
    eps: &Rat,
    cfg: &CarveConfig,
) -> Result<(IntervalSet, CarveTrace)> {
    let mut trace = CarveTrace::new(CarveKind::MeanZero, cfg);
    require_mean_zero(f, d, cfg, "D")?;
    if !e.is_subset(d) {
        return Err(Error::DomainMismatch(format!("{e} is not inside {d}")));
    }
    let lost = d.measure() - e.measure();
    if &lost > eps {
        return Err(Error::Precondition(format!("E misses {lost} of D, more than ε = {eps}")));
    }
    let g = f.restrict(d);
    let zero = Rat::zero();
    let fp = g.max_value().filter(|v| v.is_positive()).unwrap_or_default();
    let fm = g.min_value().filter(|v| v.is_negative()).map(|v| -v).unwrap_or_default();
    let norm = Rat::max_of(&fp, &fm).clone();
    if norm.is_zero() {
        trace.degenerate = true;
        trace.notes.push("f vanishes on D".into());
        return Ok((e.clone(), trace));
    }
    let tau_p = g.level_set(Cmp::Gt, &fp.half()).measure();
    let tau_m = g.level_set(Cmp::Lt, &-fm.half()).measure();
    let threshold = Rat::min_of(&(&tau_p * &fp / &norm), &(&tau_m * &fm / &norm)) / Rat::from_int(4);
    if eps > &threshold {
        return Err(Error::Precondition(format!(
            "ε = {eps} exceeds the admissible threshold {threshold}"
        )));
    }

    let deficit = g.integrate(e)?;
    let h = if deficit.is_negative() {
        trace.sign_flipped = true;
        g.neg()
    } else {
        g.clone()
    };
    let deficit = deficit.abs();
    let top = if trace.sign_flipped { &fm } else { &fp };
    let q = h.level_set(Cmp::Gt, &top.half()).intersection(e);
    let fam = TrimFamily::new(&h, &q, TrimKind::FromLeft, None)?;
    let tol = parameter_tolerance(f, d, cfg);
    let target = add_constant(fam.integral(), &-&deficit);
    let root = target
        .root(Side::Leftmost, &tol)
        .ok_or_else(|| Error::Invariant(format!("no left trim of {{f > ‖f⁺‖/2}} ∩ E removes the deficit {deficit}")))?;
    let removed = fam.removed_at(&root.x).expect("root lies in the family's range");
    let k = e.difference(&removed);
    trace.r0 = Some(if root.x.is_zero() {
        zero.clone()
    } else {
        q.inf().expect("nonempty") + fam.depth_at(&root.x).expect("in range")
    });
    trace.t0 = Some(root.x.clone());
    trace.exact = root.exact;
    trace.f_plus = fam.integral().clone();
    trace.removed_pos = removed;

    let bound = d.measure() - (Rat::one() + Rat::from_int(2) * &norm * Rat::max_of(&fp.recip(), &fm.recip())) * eps;
    if k.measure() < bound {
        return Err(Error::Invariant(format!(
            "carved set has measure {} below the guaranteed {bound}",
            k.measure()
        )));
    }
    trace.integral_residual = f.integrate(&k)?;
    if trace.integral_residual.abs() > allowance(f, &k, cfg) {
        return Err(Error::Invariant(format!("carved set keeps ∫ f = {}", trace.integral_residual)));
    }
    Ok((k, trace))
}

/// Removes exactly `c` of measure from `K` (with `∫_K f = 0`), trimming the
/// positive and the non-positive parts of `f` from both ends, so that the
/// result `E` keeps `∫_E f = 0` and stays away from `inf K` and `sup K`.
pub fn shrink_mean_zero(k: &IntervalSet, f: &PiecewiseAffine, c: &Rat, cfg: &CarveConfig) -> Result<(IntervalSet, CarveTrace)> {
    let total = k.measure();
    if !c.is_positive() || c >= &total {
        return Err(Error::Precondition(format!("shrink amount {c} is outside (0, {total})")));
    }
    require_mean_zero(f, k, cfg, "K")?;
    let g = f.restrict(k);
    if g.max_value().is_some_and(|v| v.is_zero()) && g.min_value().is_some_and(|v| v.is_zero()) {
        let mut trace = CarveTrace::new(CarveKind::Shrink, cfg);
        trace.degenerate = true;
        let fam = TrimFamily::new(&g, k, TrimKind::BothEnds, None)?;
        let removed = fam.removed_at(c).expect("c < λ(K)");
        let e = k.difference(&removed);
        trace.t0 = Some(c.clone());
        trace.r0 = fam.depth_at(c);
        trace.removed_pos = removed;
        return Ok((e, trace));
    }
    let mut notes = Vec::new();
    for zeros_negative in [true, false] {
        match shrink_attempt(k, &g, c, cfg, zeros_negative)? {
            Some((e, mut trace)) => {
                trace.notes.extend(notes);
                return Ok((e, trace));
            }
            None => notes.push(format!(
                "grouping {{f = 0}} with the {} side kept an endpoint",
                if zeros_negative { "negative" } else { "positive" }
            )),
        }
    }
    Err(Error::Invariant(format!("no balanced trim of {k} by {c} excludes both endpoints")))
}

fn shrink_attempt(
    k: &IntervalSet,
    g: &PiecewiseAffine,
    c: &Rat,
    cfg: &CarveConfig,
    zeros_negative: bool,
) -> Result<Option<(IntervalSet, CarveTrace)>> {
    let mut trace = CarveTrace::new(CarveKind::Shrink, cfg);
    let hull = k.hull().expect("nonempty");
    let reference = Some((hull.lo.clone(), hull.hi.clone()));
    let zero = Rat::zero();
    let pos = g.level_set(if zeros_negative { Cmp::Gt } else { Cmp::Ge }, &zero);
    let neg = k.difference(&pos);
    let fam_p = TrimFamily::new(g, &pos, TrimKind::BothEnds, reference.clone())?;
    let fam_n = TrimFamily::new(g, &neg, TrimKind::BothEnds, reference)?;
    let (lp, ln) = (pos.measure(), neg.measure());
    let t_lo = Rat::max_of(&zero, &(c - &ln)).clone();
    let t_hi = Rat::min_of(c, &lp).clone();
    if t_lo > t_hi {
        return Err(Error::Invariant(format!("empty trim range [{t_lo}, {t_hi}]")));
    }
    let f_plus = fam_p.integral().clone();
    let f_minus = negate(fam_n.integral());
    // ψ(t) = ∫_{A_t} f + ∫_{B_{c−t}} f, nondecreasing in t.
    let psi = if t_lo == t_hi {
        PiecewiseQuadratic::default()
    } else {
        f_plus
            .restrict(&t_lo, &t_hi)
            .add(&fam_n.integral().compose_affine(c, &Rat::from_int(-1)).restrict(&t_lo, &t_hi))
    };
    let tol = parameter_tolerance(g, k, cfg);
    let mut root = if t_lo == t_hi {
        let v = fam_p.integral_at(&t_lo).unwrap_or_default() + fam_n.integral_at(&(c - &t_lo)).unwrap_or_default();
        v.is_zero().then(|| Root {
            x: t_lo.clone(),
            exact: true,
        })
    } else {
        root_on(&psi, &t_lo, &t_hi, Side::Leftmost, &tol)
    }
    .ok_or_else(|| Error::Invariant("the balance function has no root".into()))?;
    if root.x.is_zero() && t_lo != t_hi {
        if let Some(r) = root_on(&psi, &t_lo, &t_hi, Side::Rightmost, &tol) {
            root = r;
        }
    }
    let t = root.x.clone();
    let s = c - &t;
    let a = fam_p.removed_at(&t).expect("t in range");
    let b = fam_n.removed_at(&s).expect("s in range");
    let e = k.difference(&a.union(&b));
    if e.measure() != k.measure() - c {
        return Err(Error::Invariant(format!(
            "shrunk set has measure {}, expected {}",
            e.measure(),
            k.measure() - c
        )));
    }
    if !excludes_endpoints(&e, k) {
        return Ok(None);
    }
    trace.integral_residual = g.integrate(&e)?;
    if trace.integral_residual.abs() > allowance(g, &e, cfg) {
        return Err(Error::Invariant(format!("shrunk set keeps ∫ f = {}", trace.integral_residual)));
    }
    trace.h_table = match_table(&f_plus, &f_minus, &tol);
    trace.f_plus = f_plus;
    trace.f_minus = f_minus;
    trace.removed_pos = a;
    trace.removed_neg = b;
    trace.t0 = Some(t);
    trace.exact = root.exact;
    Ok(Some((e, trace)))
}

/// Trims `K₁ ∪ K₂` (with zero integral) by at most `ε` so that the share of
/// `K₁` in the result is a dyadic with at most `cfg.ratio_bits` bits.
///
/// Without `ratio_bits`, or when no such dyadic is reachable, the set is kept
/// whole and the ratio is `λ(K₁)/λ(K)` (rational, since all endpoints are).
pub fn rational_split(k1: &IntervalSet, k2: &IntervalSet, f: &PiecewiseAffine, eps: &Rat, cfg: &CarveConfig) -> Result<SplitResult> {
    if !k1.is_disjoint(k2) {
        return Err(Error::Precondition(format!("{k1} and {k2} overlap")));
    }
    let k = k1.union(k2);
    let (l1, l2, l) = (k1.measure(), k2.measure(), k.measure());
    if !l.is_positive() {
        return Err(Error::Precondition("split of a null set".into()));
    }
    require_mean_zero(f, &k, cfg, "K₁ ∪ K₂")?;
    let mut trace = CarveTrace::new(CarveKind::RationalSplit, cfg);
    let whole = |mut trace: CarveTrace, note: Option<String>| -> Result<SplitResult> {
        trace.notes.extend(note);
        trace.integral_residual = f.integrate(&k)?;
        Ok(SplitResult {
            set: k.clone(),
            ratio: &l1 / &l,
            trace,
        })
    };
    let bits = match cfg.ratio_bits {
        Some(b) if l1.is_positive() && l2.is_positive() => b,
        _ => return whole(trace, None),
    };
    if (&l1 / &l).dyadic_bits().is_some_and(|b| b <= bits) {
        return whole(trace, None);
    }
    let g = f.restrict(&k);
    let is_zero = |s: &IntervalSet| {
        let h = g.restrict(s);
        h.max_value().is_some_and(|v| v.is_zero()) && h.min_value().is_some_and(|v| v.is_zero())
    };
    if is_zero(k1) {
        trace.degenerate = true;
        // Keep u of K₁ from the left: ratio u/(u + λ₂), increasing in u.
        let u_lo = Rat::max_of(&(&l1 - eps), &Rat::zero()).clone();
        let r = |u: &Rat| u / &(u + &l2);
        if let Some(rho) = Rat::simplest_dyadic_between(&r(&u_lo), &r(&l1), bits) {
            let u = &rho * &l2 / (Rat::one() - &rho);
            let kept = k1.prefix(&u).expect("u ≤ λ(K₁)");
            trace.removed_pos = k1.difference(&kept);
            let set = kept.union(k2);
            trace.integral_residual = f.integrate(&set)?;
            return Ok(SplitResult { set, ratio: rho, trace });
        }
        return whole(trace, Some("no short dyadic ratio within ε".into()));
    }
    if is_zero(k2) {
        trace.degenerate = true;
        // Keep u of K₂ from the left: ratio λ₁/(λ₁ + u), decreasing in u.
        let u_lo = Rat::max_of(&(&l2 - eps), &Rat::zero()).clone();
        let r = |u: &Rat| &l1 / &(&l1 + u);
        if let Some(rho) = Rat::simplest_dyadic_between(&r(&l2), &r(&u_lo), bits) {
            let u = &l1 / &rho - &l1;
            let kept = k2.prefix(&u).expect("u ≤ λ(K₂)");
            trace.removed_neg = k2.difference(&kept);
            let set = k1.union(&kept);
            trace.integral_residual = f.integrate(&set)?;
            return Ok(SplitResult { set, ratio: rho, trace });
        }
        return whole(trace, Some("no short dyadic ratio within ε".into()));
    }

    let i1 = g.integrate(k1)?;
    if i1.is_zero() {
        return whole(trace, Some("K₁ already balanced; nothing to trade".into()));
    }
    let h = if i1.is_negative() {
        trace.sign_flipped = true;
        g.neg()
    } else {
        g.clone()
    };
    let zero = Rat::zero();
    let p1 = h.level_set(Cmp::Gt, &zero).intersection(k1);
    let n2 = h.level_set(Cmp::Lt, &zero).intersection(k2);
    let fam1 = TrimFamily::new(&h, &p1, TrimKind::FromLeft, None)?;
    let fam2 = TrimFamily::new(&h, &n2, TrimKind::FromLeft, None)?;
    let f1 = fam1.integral().clone();
    let f2 = negate(fam2.integral());
    let (lp, ln) = (p1.measure(), n2.measure());
    let tol = parameter_tolerance(f, &k, cfg);
    let f2_max = f2.eval(&ln).unwrap_or_default();

    // Largest usable t: F1(t) must be matched inside N2, and t + H(t) ≤ ε.
    let t_cap = if f1.eval(&lp).unwrap_or_default() <= f2_max {
        lp.clone()
    } else {
        add_constant(&f1, &-&f2_max)
            .root(Side::Leftmost, &tol)
            .map(|r| r.x)
            .unwrap_or_default()
    };
    let lo_t = Rat::max_of(&zero, &(eps - &ln)).clone();
    let hi_t = Rat::min_of(eps, &t_cap).clone();
    let t1 = if lo_t > hi_t {
        t_cap.clone()
    } else {
        let psi = f1.sub(&f2.compose_affine(eps, &Rat::from_int(-1)));
        let at_hi = f1.eval(&hi_t).unwrap_or_default() - f2.eval(&(eps - &hi_t)).unwrap_or_default();
        if !at_hi.is_positive() {
            hi_t.clone()
        } else {
            root_on(&psi, &lo_t, &hi_t, Side::Leftmost, &tol)
                .map(|r| r.x)
                .unwrap_or_else(|| lo_t.clone())
        }
    };
    if !t1.is_positive() {
        return whole(trace, Some("no room to trim within ε".into()));
    }
    let h_at = |t: &Rat| -> Option<Rat> {
        let v = f1.eval(t)?;
        add_constant(&f2, &-v).root(Side::Leftmost, &tol).map(|r| r.x)
    };
    let ratio_at = |t: &Rat, s: &Rat| (&l1 - t) / (&l - t - s);
    let h1 = h_at(&t1).ok_or_else(|| Error::Invariant("no match for the largest trim".into()))?;
    let r0 = &l1 / &l;
    let r1 = ratio_at(&t1, &h1);
    trace.ratio_table = fam1
        .integral()
        .breakpoints()
        .into_iter()
        .filter(|t| t <= &t1)
        .take(TABLE_LIMIT)
        .filter_map(|t| h_at(&t).map(|s| (t.clone(), ratio_at(&t, &s))))
        .collect();
    trace.h_table = match_table(&f1, &f2, &tol);
    trace.f_plus = f1.clone();
    trace.f_minus = f2.clone();
    let (rlo, rhi) = if r0 <= r1 { (&r0, &r1) } else { (&r1, &r0) };
    let rho = match Rat::simplest_dyadic_between(rlo, rhi, bits) {
        Some(r) if &r != rlo && &r != rhi => r,
        _ => {
            return whole(
                trace,
                Some(format!("no dyadic with ≤ {bits} bits strictly between {rlo} and {rhi}")),
            )
        }
    };
    // (λ₁ − t) = ρ(λ − t − s)  ⇔  s = α + βt.
    let alpha = &l - &l1 / &rho;
    let beta = rho.recip() - Rat::one();
    let phi = f1.sub(&f2.compose_affine(&alpha, &beta));
    let lo = Rat::max_of(&zero, &(-&alpha / &beta)).clone();
    let hi = Rat::min_of(&t1, &((&ln - &alpha) / &beta)).clone();
    let root = if lo <= hi {
        root_on(&phi, &lo, &hi, Side::Leftmost, &tol)
    } else {
        None
    };
    let Some(root) = root else {
        return whole(trace, Some(format!("ratio {rho} not reached along the trim curve")));
    };
    let t = root.x;
    let s = &alpha + &beta * &t;
    let a = fam1.removed_at(&t).expect("t in range");
    let b = fam2.removed_at(&s).expect("s in range");
    let removed = a.union(&b);
    if &removed.measure() > eps {
        return whole(trace, Some(format!("trim of {} exceeds ε", removed.measure())));
    }
    let set = k.difference(&removed);
    let ratio = set.intersection(k1).measure() / set.measure();
    if ratio != rho {
        return Err(Error::Invariant(format!("split ratio {ratio} differs from the target {rho}")));
    }
    trace.integral_residual = f.integrate(&set)?;
    if trace.integral_residual.abs() > allowance(f, &set, cfg) {
        return Err(Error::Invariant(format!("split set keeps ∫ f = {}", trace.integral_residual)));
    }
    trace.exact = root.exact;
    trace.t0 = Some(t);
    trace.r0 = Some(s);
    trace.removed_pos = a;
    trace.removed_neg = b;
    Ok(SplitResult { set, ratio, trace })
}

/// Removes `c` of measure from `K` so that the result keeps `∫ f = 0`, avoids
/// `inf K` and `sup K`, and has an exact rational share left of the midpoint
/// of `K`'s hull.
pub fn split_half(k: &IntervalSet, f: &PiecewiseAffine, c: &Rat, cfg: &CarveConfig) -> Result<SplitResult> {
    let hull = k.hull().ok_or_else(|| Error::Precondition("split of an empty set".into()))?;
    let mid = hull.midpoint();
    let kl = k.clip(&hull.lo, &mid);
    let kr = k.clip(&mid, &hull.hi);
    let (ll, lr) = (kl.measure(), kr.measure());
    let mut trace = CarveTrace::new(CarveKind::SplitHalf, cfg);
    if ll.is_zero() || lr.is_zero() {
        let (set, child) = shrink_mean_zero(k, f, c, cfg)?;
        trace.integral_residual = child.integral_residual.clone();
        trace.exact = child.exact;
        trace.children.push(child);
        let ratio = if ll.is_zero() { Rat::zero() } else { Rat::one() };
        return Ok(SplitResult { set, ratio, trace });
    }
    let cap = Rat::min_of(&ll, &lr);
    if !c.is_positive() || c >= cap {
        return Err(Error::Precondition(format!("split amount {c} is outside (0, {cap})")));
    }
    let split = rational_split(&kl, &kr, f, &c.half(), cfg)?;
    let kt = split.set.clone();
    let delta = k.measure() - kt.measure();
    let rho = split.ratio.clone();
    let rest = c - &delta;
    let ktl = kt.intersection(&kl);
    let ktr = kt.intersection(&kr);
    let centered = |s: &IntervalSet| -> Result<PiecewiseAffine> {
        let m = s.measure();
        let part = f.restrict(s);
        if m.is_zero() {
            return Ok(part);
        }
        let mean = part.integrate(s)? / m;
        Ok(part.add_constant(&-mean))
    };
    trace.exact = split.trace.exact;
    trace.children.push(split.trace);
    let mut parts = Vec::new();
    for (side, amount) in [(&ktl, &rho * &rest), (&ktr, (Rat::one() - &rho) * &rest)] {
        if amount.is_zero() {
            parts.push(side.clone());
            continue;
        }
        let h = centered(side)?;
        let (e, child) = shrink_mean_zero(side, &h, &amount, cfg)?;
        trace.exact &= child.exact;
        trace.children.push(child);
        parts.push(e);
    }
    let set = parts[0].union(&parts[1]);
    let ratio = parts[0].measure() / set.measure();
    if ratio != rho {
        return Err(Error::Invariant(format!("half split ratio {ratio} differs from {rho}")));
    }
    if set.measure() != k.measure() - c {
        return Err(Error::Invariant(format!(
            "half split has measure {}, expected {}",
            set.measure(),
            k.measure() - c
        )));
    }
    if !excludes_endpoints(&set, k) {
        return Err(Error::Invariant("half split kept an endpoint of K".into()));
    }
    trace.integral_residual = f.integrate(&set)?;
    if trace.integral_residual.abs() > allowance(f, &set, cfg) {
        return Err(Error::Invariant(format!("half split keeps ∫ f = {}", trace.integral_residual)));
    }
    Ok(SplitResult { set, ratio, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{StepFunction, StepPiece};
    use crate::interval::{set_of, Interval};
    use crate::rational::rat;

    fn sign_step() -> PiecewiseAffine {
        StepFunction::new(vec![
            StepPiece::new(rat(0, 1), rat(1, 2), rat(1, 1)),
            StepPiece::new(rat(1, 2), rat(1, 1), rat(-1, 1)),
        ])
        .unwrap()
        .to_affine()
    }

    #[test]
    fn carve_nothing_lost() {
        let d = IntervalSet::unit();
        let (k, tr) = carve_mean_zero(&d, &sign_step(), &d, &rat(1, 16), &CarveConfig::default()).unwrap();
        assert_eq!(k, d);
        assert_eq!(tr.r0, Some(Rat::zero()));
    }

    #[test]
    fn carve_restores_balance() {
        let d = IntervalSet::unit();
        let e = set_of(&[((0, 1), (3, 4)), ((7, 8), (1, 1))]);
        let (k, tr) = carve_mean_zero(&d, &sign_step(), &e, &rat(1, 8), &CarveConfig::default()).unwrap();
        assert_eq!(k, set_of(&[((1, 8), (3, 4)), ((7, 8), (1, 1))]));
        assert_eq!(tr.r0, Some(rat(1, 8)));
        assert_eq!(sign_step().integrate(&k).unwrap(), Rat::zero());
    }

    #[test]
    fn carve_rejects_large_eps() {
        let d = IntervalSet::unit();
        let err = carve_mean_zero(&d, &sign_step(), &d, &rat(1, 4), &CarveConfig::default()).unwrap_err();
        assert!(err.to_string().contains("1/8"), "{err}");
    }

    #[test]
    fn shrink_examples() {
        let k = IntervalSet::unit();
        let cfg = CarveConfig::default();
        let (e, tr) = shrink_mean_zero(&k, &sign_step(), &rat(1, 2), &cfg).unwrap();
        assert_eq!(e, set_of(&[((1, 4), (3, 4))]));
        assert_eq!(tr.t0, Some(rat(1, 4)));

        let z = PiecewiseAffine::zero(&k);
        let (e, _) = shrink_mean_zero(&k, &z, &rat(1, 2), &cfg).unwrap();
        assert_eq!(e, set_of(&[((1, 4), (3, 4))]));

        let (e, _) = shrink_mean_zero(&k, &sign_step(), &rat(1, 100), &cfg).unwrap();
        assert_eq!(e.measure(), rat(99, 100));
        assert!(excludes_endpoints(&e, &k));
    }

    #[test]
    fn shrink_with_zero_region_at_an_end() {
        let f = StepFunction::new(vec![
            StepPiece::new(rat(0, 1), rat(1, 4), rat(1, 1)),
            StepPiece::new(rat(1, 4), rat(1, 2), rat(-1, 1)),
            StepPiece::new(rat(1, 2), rat(1, 1), rat(0, 1)),
        ])
        .unwrap()
        .to_affine();
        let k = IntervalSet::unit();
        let (e, tr) = shrink_mean_zero(&k, &f, &rat(1, 4), &CarveConfig::default()).unwrap();
        assert_eq!(e.measure(), rat(3, 4));
        assert_eq!(f.integrate(&e).unwrap(), Rat::zero());
        assert!(excludes_endpoints(&e, &k));
        assert_eq!(tr.notes.len(), 1);
    }

    #[test]
    fn shrink_affine_is_exact_or_within_tolerance() {
        let f = PiecewiseAffine::linear(&Interval::unit(), Rat::one(), rat(-1, 2));
        let k = IntervalSet::unit();
        let cfg = CarveConfig::default();
        let (e, tr) = shrink_mean_zero(&k, &f, &rat(1, 3), &cfg).unwrap();
        assert_eq!(e.measure(), rat(2, 3));
        assert!(f.integrate(&e).unwrap().abs() <= cfg.tolerance);
        assert!(tr.is_monotone());
    }

    #[test]
    fn split_half_example() {
        let k = IntervalSet::unit();
        let r = split_half(&k, &sign_step(), &rat(1, 4), &CarveConfig::default()).unwrap();
        assert_eq!(r.set, set_of(&[((1, 16), (7, 16)), ((9, 16), (15, 16))]));
        assert_eq!(r.ratio, rat(1, 2));
        assert_eq!(sign_step().integrate(&r.set).unwrap(), Rat::zero());
    }

    #[test]
    fn rational_split_dyadic() {
        let f = sign_step();
        let k1 = set_of(&[((0, 1), (1, 3))]);
        let k2 = set_of(&[((1, 3), (1, 1))]);
        let cfg = CarveConfig {
            ratio_bits: Some(8),
            ..CarveConfig::default()
        };
        let r = rational_split(&k1, &k2, &f, &rat(1, 10), &cfg).unwrap();
        assert!(r.ratio.dyadic_bits().unwrap_or(99) <= 8, "{:?} {:?}", r.ratio, r.trace.notes);
        assert_eq!(r.set.intersection(&k1).measure() / r.set.measure(), r.ratio);
        assert!(IntervalSet::unit().measure() - r.set.measure() <= rat(1, 10));
        assert_eq!(f.integrate(&r.set).unwrap(), Rat::zero());

        let plain = rational_split(&k1, &k2, &f, &rat(1, 10), &CarveConfig::default()).unwrap();
        assert_eq!(plain.ratio, rat(1, 3));
        assert_eq!(plain.set, IntervalSet::unit());
    }

    #[test]
    fn rational_split_zero_function() {
        let z = PiecewiseAffine::zero(&IntervalSet::unit());
        let k1 = set_of(&[((0, 1), (1, 3))]);
        let k2 = set_of(&[((1, 3), (1, 1))]);
        let cfg = CarveConfig {
            ratio_bits: Some(4),
            ..CarveConfig::default()
        };
        let r = rational_split(&k1, &k2, &z, &rat(1, 10), &cfg).unwrap();
        assert!(r.trace.degenerate);
        assert!(r.ratio.dyadic_bits().is_some());
        assert_eq!(r.set.intersection(&k1).measure() / r.set.measure(), r.ratio);
    }
}
