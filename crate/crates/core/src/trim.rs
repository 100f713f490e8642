//! Removing measure from the ends of a set, parametrized by the amount
//! removed.
//!
//! A [`TrimFamily`] fixes a set `S`, a reference interval `[lo, hi]` and a
//! direction. For every `t ∈ [0, λ(S)]` it describes the removed part `A_t`
//! (the points of `S` within some depth of the chosen ends, with
//! `λ(A_t) = t`) and the integral `t ↦ ∫_{A_t} f` as an exact piecewise
//! quadratic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::PiecewiseAffine;
use crate::interval::IntervalSet;
use crate::quadratic::{PiecewiseQuadratic, Poly2, QuadPiece};
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimKind {
    /// Remove `S ∩ [lo, lo + a)`.
    FromLeft,
    /// Remove `S ∩ [hi − a, hi)`.
    FromRight,
    /// Remove `S ∩ ([lo, lo + a) ∪ [hi − a, hi))`.
    BothEnds,
}

#[derive(Debug, Clone)]
struct Segment {
    t0: Rat,
    t1: Rat,
    a0: Rat,
    /// Rate `dt/da`: the number of fronts currently inside `S`.
    k: i64,
}

#[derive(Debug, Clone)]
pub struct TrimFamily {
    set: IntervalSet,
    kind: TrimKind,
    lo: Rat,
    hi: Rat,
    segments: Vec<Segment>,
    integral: PiecewiseQuadratic,
}

impl TrimFamily {
    /// `reference` defaults to `[inf S, sup S]`.
    pub fn new(f: &PiecewiseAffine, set: &IntervalSet, kind: TrimKind, reference: Option<(Rat, Rat)>) -> Result<TrimFamily> {
        let g = f.restrict(set);
        if g.domain() != *set {
            return Err(Error::DomainMismatch(format!(
                "trim set {set} is not inside the integrand's domain"
            )));
        }
        let (lo, hi) = match (reference, set.hull()) {
            (Some(r), _) => r,
            (None, Some(h)) => (h.lo, h.hi),
            (None, None) => (Rat::zero(), Rat::zero()),
        };
        if let Some(h) = set.hull() {
            if h.lo < lo || h.hi > hi {
                return Err(Error::Precondition(format!(
                    "trim set {set} extends beyond the reference [{lo}, {hi}]"
                )));
            }
        }
        let (left, right) = match kind {
            TrimKind::FromLeft => (true, false),
            TrimKind::FromRight => (false, true),
            TrimKind::BothEnds => (true, true),
        };
        let max_depth = match kind {
            TrimKind::BothEnds => (&hi - &lo).half(),
            _ => &hi - &lo,
        };

        let mut depths = vec![Rat::zero(), max_depth.clone()];
        for x in g.breakpoints() {
            if left {
                let d = &x - &lo;
                if !d.is_negative() && d <= max_depth {
                    depths.push(d);
                }
            }
            if right {
                let d = &hi - &x;
                if !d.is_negative() && d <= max_depth {
                    depths.push(d);
                }
            }
        }
        depths.sort();
        depths.dedup();

        let mut segments = Vec::new();
        let mut pieces = Vec::new();
        let mut t = Rat::zero();
        let mut acc = Rat::zero();
        for w in depths.windows(2) {
            let (a0, a1) = (&w[0], &w[1]);
            let am = Rat::midpoint(a0, a1);
            // Integral removed since depth a0, as a polynomial in the depth a.
            let mut poly_a = Poly2::default();
            let mut k = 0i64;
            if left {
                if let Some(p) = g.piece_at(&(&lo + &am)) {
                    let anti = Poly2::antiderivative_of_affine(&p.slope, &p.intercept);
                    let base = anti.eval(&(&lo + a0));
                    poly_a = poly_a.add(&anti.compose_affine(&lo, &Rat::one()).add_constant(&-base));
                    k += 1;
                }
            }
            if right {
                if let Some(p) = g.piece_at(&(&hi - &am)) {
                    let anti = Poly2::antiderivative_of_affine(&p.slope, &p.intercept);
                    let base = anti.eval(&(&hi - a0));
                    poly_a = poly_a.add(
                        &anti
                            .compose_affine(&hi, &Rat::from_int(-1))
                            .scale(&Rat::from_int(-1))
                            .add_constant(&base),
                    );
                    k += 1;
                }
            }
            if k == 0 {
                continue;
            }
            let kr = Rat::from_int(k);
            let t1 = &t + &kr * (a1 - a0);
            // a = a0 + (t − t0)/k
            let p = a0 - &t / &kr;
            let q = kr.recip();
            let poly_t = poly_a.compose_affine(&p, &q).add_constant(&acc);
            acc = &acc + poly_a.eval(a1);
            pieces.push(QuadPiece {
                lo: t.clone(),
                hi: t1.clone(),
                poly: poly_t,
            });
            segments.push(Segment {
                t0: t.clone(),
                t1: t1.clone(),
                a0: a0.clone(),
                k,
            });
            t = t1;
        }
        let integral = if pieces.is_empty() {
            PiecewiseQuadratic::constant(Rat::zero(), Rat::zero(), Rat::zero())
        } else {
            PiecewiseQuadratic::new(pieces)
        };
        Ok(TrimFamily {
            set: set.clone(),
            kind,
            lo,
            hi,
            segments,
            integral,
        })
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn kind(&self) -> TrimKind {
        self.kind
    }

    pub fn reference(&self) -> (&Rat, &Rat) {
        (&self.lo, &self.hi)
    }

    /// `λ(S)`, the largest admissible parameter.
    pub fn total(&self) -> Rat {
        self.set.measure()
    }

    /// `t ↦ ∫_{A_t} f` on `[0, λ(S)]`.
    pub fn integral(&self) -> &PiecewiseQuadratic {
        &self.integral
    }

    pub fn integral_at(&self, t: &Rat) -> Option<Rat> {
        self.integral.eval(t)
    }

    /// Smallest depth `a` at which `t` has been removed.
    pub fn depth_at(&self, t: &Rat) -> Option<Rat> {
        if !t.is_positive() {
            return (t.is_zero()).then(Rat::zero);
        }
        let seg = self.segments.iter().find(|s| t <= &s.t1)?;
        Some(&seg.a0 + (t - &seg.t0) / Rat::from_int(seg.k))
    }

    /// The removed set `A_t`.
    pub fn removed_at(&self, t: &Rat) -> Option<IntervalSet> {
        let a = self.depth_at(t)?;
        Some(self.removed_at_depth(&a))
    }

    pub fn removed_at_depth(&self, a: &Rat) -> IntervalSet {
        let left = self.set.clip(&self.lo, &(&self.lo + a));
        let right = self.set.clip(&(&self.hi - a), &self.hi);
        match self.kind {
            TrimKind::FromLeft => left,
            TrimKind::FromRight => right,
            TrimKind::BothEnds => left.union(&right),
        }
    }
}

/// `x ↦ ∫_{S ∩ [lo, x)} f` for `x ∈ [lo, hi]`, including flat stretches
/// across gaps of `S`.
pub fn cumulative_integral(f: &PiecewiseAffine, set: &IntervalSet, lo: &Rat, hi: &Rat) -> Result<PiecewiseQuadratic> {
    let clipped = set.clip(lo, hi);
    let g = f.restrict(&clipped);
    if g.domain() != clipped {
        return Err(Error::DomainMismatch(format!("set {clipped} is not inside the integrand's domain")));
    }
    let mut pts = vec![lo.clone(), hi.clone()];
    pts.extend(g.breakpoints());
    pts.sort();
    pts.dedup();
    let mut pieces = Vec::new();
    let mut acc = Rat::zero();
    for w in pts.windows(2) {
        let (x0, x1) = (&w[0], &w[1]);
        let mid = Rat::midpoint(x0, x1);
        let poly = match g.piece_at(&mid) {
            Some(p) => {
                let anti = Poly2::antiderivative_of_affine(&p.slope, &p.intercept);
                let base = anti.eval(x0);
                anti.add_constant(&(&acc - base))
            }
            None => Poly2::constant(acc.clone()),
        };
        acc = poly.eval(x1);
        pieces.push(QuadPiece {
            lo: x0.clone(),
            hi: x1.clone(),
            poly,
        });
    }
    if pieces.is_empty() {
        return Ok(PiecewiseQuadratic::constant(lo.clone(), hi.clone(), Rat::zero()));
    }
    Ok(PiecewiseQuadratic::new(pieces))
}
