//! Piecewise-quadratic functions of one rational variable and their roots.
//!
//! Integrals of piecewise-affine functions over growing sets are piecewise
//! quadratic in the growth parameter. Roots are exact whenever the
//! discriminant is a rational square (always, for step integrands); otherwise
//! a rational within the requested tolerance of the true root is returned and
//! flagged as inexact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rat;

/// `a·t² + b·t + c`.
#[derive(Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Poly2 {
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
}

impl fmt::Debug for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·t² + {}·t + {}", self.a, self.b, self.c)
    }
}

impl Poly2 {
    pub fn new(a: Rat, b: Rat, c: Rat) -> Poly2 {
        Poly2 { a, b, c }
    }

    pub fn constant(c: Rat) -> Poly2 {
        Poly2::new(Rat::zero(), Rat::zero(), c)
    }

    /// The antiderivative `y ↦ s·y²/2 + c·y` of `y ↦ s·y + c`.
    pub fn antiderivative_of_affine(slope: &Rat, intercept: &Rat) -> Poly2 {
        Poly2::new(slope.half(), intercept.clone(), Rat::zero())
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        (&self.a * t + &self.b) * t + &self.c
    }

    pub fn add(&self, o: &Poly2) -> Poly2 {
        Poly2::new(&self.a + &o.a, &self.b + &o.b, &self.c + &o.c)
    }

    pub fn sub(&self, o: &Poly2) -> Poly2 {
        Poly2::new(&self.a - &o.a, &self.b - &o.b, &self.c - &o.c)
    }

    pub fn scale(&self, k: &Rat) -> Poly2 {
        Poly2::new(&self.a * k, &self.b * k, &self.c * k)
    }

    pub fn add_constant(&self, k: &Rat) -> Poly2 {
        Poly2::new(self.a.clone(), self.b.clone(), &self.c + k)
    }

    /// `t ↦ P(p + q·t)`.
    pub fn compose_affine(&self, p: &Rat, q: &Rat) -> Poly2 {
        // a(p + q t)² + b(p + q t) + c
        let a = &self.a * q * q;
        let b = Rat::from_int(2) * &self.a * p * q + &self.b * q;
        let c = &self.a * p * p + &self.b * p + &self.c;
        Poly2::new(a, b, c)
    }

    pub fn derivative_at(&self, t: &Rat) -> Rat {
        Rat::from_int(2) * &self.a * t + &self.b
    }
}

/// A quadratic on the closed interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadPiece {
    pub lo: Rat,
    pub hi: Rat,
    pub poly: Poly2,
}

/// Which root to return when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Leftmost,
    Rightmost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Root {
    pub x: Rat,
    /// `true` when `x` is the exact root; otherwise `|x − root| ≤ tol`.
    pub exact: bool,
}

/// Contiguous quadratic pieces over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PiecewiseQuadratic {
    pieces: Vec<QuadPiece>,
}

impl PiecewiseQuadratic {
    pub fn new(pieces: Vec<QuadPiece>) -> PiecewiseQuadratic {
        debug_assert!(pieces.windows(2).all(|w| w[0].hi == w[1].lo));
        debug_assert!(pieces.iter().all(|p| p.lo <= p.hi));
        PiecewiseQuadratic { pieces }
    }

    pub fn constant(lo: Rat, hi: Rat, c: Rat) -> PiecewiseQuadratic {
        PiecewiseQuadratic::new(vec![QuadPiece {
            lo,
            hi,
            poly: Poly2::constant(c),
        }])
    }

    pub fn pieces(&self) -> &[QuadPiece] {
        &self.pieces
    }

    pub fn lo(&self) -> Option<&Rat> {
        self.pieces.first().map(|p| &p.lo)
    }

    pub fn hi(&self) -> Option<&Rat> {
        self.pieces.last().map(|p| &p.hi)
    }

    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut out: Vec<Rat> = self.pieces.iter().map(|p| p.lo.clone()).collect();
        if let Some(h) = self.hi() {
            out.push(h.clone());
        }
        out.dedup();
        out
    }

    /// Value at `t ∈ [lo, hi]`; at a join the left piece is used.
    pub fn eval(&self, t: &Rat) -> Option<Rat> {
        let idx = self.pieces.partition_point(|p| &p.hi < t);
        let p = self.pieces.get(idx)?;
        (&p.lo <= t).then(|| p.poly.eval(t))
    }

    /// `t ↦ F(p + q·t)` for `q ≠ 0`, on the preimage of the domain.
    pub fn compose_affine(&self, p: &Rat, q: &Rat) -> PiecewiseQuadratic {
        assert!(!q.is_zero(), "compose with a constant map");
        let mut pieces: Vec<QuadPiece> = self
            .pieces
            .iter()
            .map(|pc| {
                let a = (&pc.lo - p) / q;
                let b = (&pc.hi - p) / q;
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                QuadPiece {
                    lo,
                    hi,
                    poly: pc.poly.compose_affine(p, q),
                }
            })
            .collect();
        if q.is_negative() {
            pieces.reverse();
        }
        PiecewiseQuadratic::new(pieces)
    }

    /// Restriction to `[lo, hi]` (clamped to the domain).
    pub fn restrict(&self, lo: &Rat, hi: &Rat) -> PiecewiseQuadratic {
        let mut out = Vec::new();
        for p in &self.pieces {
            let a = Rat::max_of(&p.lo, lo);
            let b = Rat::min_of(&p.hi, hi);
            if a < b || (a == b && out.is_empty() && lo == hi) {
                out.push(QuadPiece {
                    lo: a.clone(),
                    hi: b.clone(),
                    poly: p.poly.clone(),
                });
            }
        }
        PiecewiseQuadratic::new(out)
    }

    /// Pointwise combination on the intersection of the two domains.
    pub fn combine(&self, other: &PiecewiseQuadratic, f: impl Fn(&Poly2, &Poly2) -> Poly2) -> PiecewiseQuadratic {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let a = &self.pieces[i];
            let b = &other.pieces[j];
            let lo = Rat::max_of(&a.lo, &b.lo);
            let hi = Rat::min_of(&a.hi, &b.hi);
            if lo < hi {
                out.push(QuadPiece {
                    lo: lo.clone(),
                    hi: hi.clone(),
                    poly: f(&a.poly, &b.poly),
                });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        PiecewiseQuadratic::new(out)
    }

    pub fn add(&self, other: &PiecewiseQuadratic) -> PiecewiseQuadratic {
        self.combine(other, Poly2::add)
    }

    pub fn sub(&self, other: &PiecewiseQuadratic) -> PiecewiseQuadratic {
        self.combine(other, Poly2::sub)
    }

    pub fn map(&self, f: impl Fn(&Poly2) -> Poly2) -> PiecewiseQuadratic {
        PiecewiseQuadratic::new(
            self.pieces
                .iter()
                .map(|p| QuadPiece {
                    lo: p.lo.clone(),
                    hi: p.hi.clone(),
                    poly: f(&p.poly),
                })
                .collect(),
        )
    }

    /// Nondecreasing on every piece and across joins (checked at piece
    /// endpoints and vertices).
    pub fn is_nondecreasing(&self) -> bool {
        let mut prev: Option<Rat> = None;
        for p in &self.pieces {
            let at_lo = p.poly.eval(&p.lo);
            if let Some(v) = &prev {
                if &at_lo < v {
                    return false;
                }
            }
            if p.poly.derivative_at(&p.lo).is_negative() && p.lo != p.hi {
                return false;
            }
            if p.poly.derivative_at(&p.hi).is_negative() && p.lo != p.hi {
                return false;
            }
            prev = Some(p.poly.eval(&p.hi));
        }
        true
    }

    /// A root of the function, `Leftmost` or `Rightmost`, or `None` when the
    /// function has no zero on its domain. Inexact roots are within `tol`.
    pub fn root(&self, side: Side, tol: &Rat) -> Option<Root> {
        let order: Box<dyn Iterator<Item = &QuadPiece>> = match side {
            Side::Leftmost => Box::new(self.pieces.iter()),
            Side::Rightmost => Box::new(self.pieces.iter().rev()),
        };
        for p in order {
            if let Some(r) = piece_root(p, side, tol) {
                return Some(r);
            }
        }
        None
    }
}

fn piece_root(p: &QuadPiece, side: Side, tol: &Rat) -> Option<Root> {
    let Poly2 { a, b, c } = &p.poly;
    let in_range = |x: &Rat| &p.lo <= x && x <= &p.hi;
    let pick = |mut xs: Vec<Rat>| -> Option<Rat> {
        xs.retain(|x| in_range(x));
        match side {
            Side::Leftmost => xs.into_iter().min(),
            Side::Rightmost => xs.into_iter().max(),
        }
    };
    if a.is_zero() {
        if b.is_zero() {
            return c.is_zero().then(|| Root {
                x: match side {
                    Side::Leftmost => p.lo.clone(),
                    Side::Rightmost => p.hi.clone(),
                },
                exact: true,
            });
        }
        return pick(vec![-c / b]).map(|x| Root { x, exact: true });
    }
    let disc = b * b - Rat::from_int(4) * a * c;
    if disc.is_negative() {
        return None;
    }
    let two_a = Rat::from_int(2) * a;
    if let Some(sq) = disc.sqrt_exact() {
        let r1 = (-b - &sq) / &two_a;
        let r2 = (-b + &sq) / &two_a;
        return pick(vec![r1, r2]).map(|x| Root { x, exact: true });
    }
    // Irrational roots: bracket each monotone branch and bisect.
    let vertex = -b / &two_a;
    let mut cuts = vec![p.lo.clone()];
    if p.lo < vertex && vertex < p.hi {
        cuts.push(vertex);
    }
    cuts.push(p.hi.clone());
    let brackets: Vec<(Rat, Rat)> = cuts.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    let ordered: Box<dyn Iterator<Item = &(Rat, Rat)>> = match side {
        Side::Leftmost => Box::new(brackets.iter()),
        Side::Rightmost => Box::new(brackets.iter().rev()),
    };
    for (lo, hi) in ordered {
        let (flo, fhi) = (p.poly.eval(lo), p.poly.eval(hi));
        if flo.is_zero() || fhi.is_zero() {
            // Exact endpoint zeros cannot occur with an irrational
            // discriminant unless the endpoint itself is irrational.
            let x = if flo.is_zero() { lo.clone() } else { hi.clone() };
            return Some(Root { x, exact: true });
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        let (mut l, mut h) = (lo.clone(), hi.clone());
        let lo_sign = flo.signum();
        while &h - &l > *tol {
            let m = Rat::midpoint(&l, &h);
            if p.poly.eval(&m).signum() == lo_sign {
                l = m;
            } else {
                h = m;
            }
        }
        return Some(Root {
            x: Rat::simplest_between(&l, &h),
            exact: false,
        });
    }
    None
}
