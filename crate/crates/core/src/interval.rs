//! Half-open rational intervals and finite unions of them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// The half-open interval `[lo, hi)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Interval {
        assert!(lo <= hi, "interval with lo > hi: [{lo}, {hi})");
        Interval { lo, hi }
    }

    pub fn try_new(lo: Rat, hi: Rat) -> Result<Interval> {
        if lo > hi {
            return Err(Error::Malformed(format!("interval with lo > hi: [{lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Interval {
        Interval::new(Rat::zero(), Rat::one())
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = Rat::max_of(&self.lo, &other.lo);
        let hi = Rat::min_of(&self.hi, &other.hi);
        if lo < hi {
            Some(Interval::new(lo.clone(), hi.clone()))
        } else {
            None
        }
    }

    pub fn translate(&self, d: &Rat) -> Interval {
        Interval::new(&self.lo + d, &self.hi + d)
    }

    pub fn midpoint(&self) -> Rat {
        Rat::midpoint(&self.lo, &self.hi)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A finite union of half-open intervals in canonical form: sorted, pairwise
/// disjoint, no empty pieces, and no two pieces touching.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct IntervalSet {
    pieces: Vec<Interval>,
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pieces: Vec<Interval>,
        }
        let raw = Raw::deserialize(d)?;
        for p in &raw.pieces {
            if p.lo > p.hi {
                return Err(serde::de::Error::custom(format!("interval with lo > hi: {p}")));
            }
        }
        Ok(IntervalSet::new(raw.pieces))
    }
}

impl IntervalSet {
    /// Canonical union of the given intervals (overlaps allowed).
    pub fn new(mut pieces: Vec<Interval>) -> IntervalSet {
        pieces.retain(|p| !p.is_empty());
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = out.last_mut() {
                if p.lo <= last.hi {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                    continue;
                }
            }
            out.push(p);
        }
        IntervalSet { pieces: out }
    }

    pub fn empty() -> IntervalSet {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn unit() -> IntervalSet {
        IntervalSet::from(Interval::unit())
    }

    pub fn interval(lo: Rat, hi: Rat) -> IntervalSet {
        IntervalSet::from(Interval::new(lo, hi))
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        self.pieces.iter().all(|p| !p.is_empty()) && self.pieces.windows(2).all(|w| w[0].hi < w[1].lo)
    }

    pub fn measure(&self) -> Rat {
        self.pieces.iter().map(|p| p.length()).sum()
    }

    pub fn inf(&self) -> Option<&Rat> {
        self.pieces.first().map(|p| &p.lo)
    }

    pub fn sup(&self) -> Option<&Rat> {
        self.pieces.last().map(|p| &p.hi)
    }

    /// Smallest interval containing the set.
    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.inf()?.clone(), self.sup()?.clone()))
    }

    fn locate(&self, x: &Rat) -> Option<usize> {
        // Index of the last piece with lo <= x.
        let idx = self.pieces.partition_point(|p| &p.lo <= x);
        idx.checked_sub(1)
    }

    pub fn contains(&self, x: &Rat) -> bool {
        self.locate(x).is_some_and(|i| self.pieces[i].contains(x))
    }

    pub fn contains_interval(&self, iv: &Interval) -> bool {
        if iv.is_empty() {
            return true;
        }
        self.locate(&iv.lo).is_some_and(|i| self.pieces[i].contains_interval(iv))
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.pieces.iter().all(|p| other.contains_interval(p))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.pieces.clone();
        all.extend(other.pieces.iter().cloned());
        IntervalSet::new(all)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let a = &self.pieces[i];
            let b = &other.pieces[j];
            if let Some(c) = a.intersect(b) {
                out.push(c);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::new(out)
    }

    pub fn intersect_interval(&self, iv: &Interval) -> IntervalSet {
        self.intersection(&IntervalSet::from(iv.clone()))
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let mut j = 0;
        for a in &self.pieces {
            let mut cur = a.lo.clone();
            while j < other.pieces.len() && other.pieces[j].hi <= a.lo {
                j += 1;
            }
            let mut k = j;
            while k < other.pieces.len() && other.pieces[k].lo < a.hi {
                let b = &other.pieces[k];
                if b.lo > cur {
                    out.push(Interval::new(cur.clone(), b.lo.clone()));
                }
                if b.hi > cur {
                    cur = b.hi.clone();
                }
                k += 1;
            }
            if cur < a.hi {
                out.push(Interval::new(cur, a.hi.clone()));
            }
        }
        IntervalSet::new(out)
    }

    pub fn is_disjoint(&self, other: &IntervalSet) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn translate(&self, d: &Rat) -> IntervalSet {
        IntervalSet {
            pieces: self.pieces.iter().map(|p| p.translate(d)).collect(),
        }
    }

    /// All piece endpoints, in order.
    pub fn boundary_points(&self) -> Vec<Rat> {
        self.pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]).collect()
    }

    /// `λ(S ∩ (-∞, x))`.
    pub fn measure_below(&self, x: &Rat) -> Rat {
        let mut m = Rat::zero();
        for p in &self.pieces {
            if &p.hi <= x {
                m += p.length();
            } else {
                if &p.lo < x {
                    m += x - &p.lo;
                }
                break;
            }
        }
        m
    }

    /// Leftmost `x` with `λ(S ∩ (-∞, x)) = m`, for `0 ≤ m ≤ λ(S)`.
    ///
    /// The leftmost choice never lands in a gap: for `m` equal to a piece's
    /// cumulative measure the result is that piece's right end.
    pub fn point_at_measure(&self, m: &Rat) -> Option<Rat> {
        if m.is_negative() {
            return None;
        }
        if m.is_zero() {
            return self.inf().cloned();
        }
        let mut acc = Rat::zero();
        for p in &self.pieces {
            let len = p.length();
            let next = &acc + &len;
            if m <= &next {
                return Some(&p.lo + (m - &acc));
            }
            acc = next;
        }
        None
    }

    /// The leftmost part of `S` with measure `m`.
    pub fn prefix(&self, m: &Rat) -> Option<IntervalSet> {
        if m.is_zero() {
            return Some(IntervalSet::empty());
        }
        let x = self.point_at_measure(m)?;
        Some(self.below(&x))
    }

    /// The rightmost part of `S` with measure `m`.
    pub fn suffix(&self, m: &Rat) -> Option<IntervalSet> {
        let total = self.measure();
        if m > &total {
            return None;
        }
        if m.is_zero() {
            return Some(IntervalSet::empty());
        }
        let x = self.point_at_measure(&(&total - m))?;
        // Rightmost split: step past any gap following x.
        Some(self.at_or_above(&x))
    }

    /// `S ∩ (-∞, x)`.
    pub fn below(&self, x: &Rat) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.pieces {
            if &p.hi <= x {
                out.push(p.clone());
            } else {
                if &p.lo < x {
                    out.push(Interval::new(p.lo.clone(), x.clone()));
                }
                break;
            }
        }
        IntervalSet { pieces: out }
    }

    /// `S ∩ [x, ∞)`.
    pub fn at_or_above(&self, x: &Rat) -> IntervalSet {
        let mut out = Vec::new();
        for p in &self.pieces {
            if &p.hi <= x {
                continue;
            }
            if &p.lo < x {
                out.push(Interval::new(x.clone(), p.hi.clone()));
            } else {
                out.push(p.clone());
            }
        }
        IntervalSet { pieces: out }
    }

    /// `S ∩ [lo, hi)`.
    pub fn clip(&self, lo: &Rat, hi: &Rat) -> IntervalSet {
        if lo >= hi {
            return IntervalSet::empty();
        }
        self.at_or_above(lo).below(hi)
    }

    /// Splits `S` left to right into `k` consecutive parts of equal measure.
    pub fn split_equal(&self, k: usize) -> Vec<IntervalSet> {
        assert!(k > 0, "split into zero parts");
        let total = self.measure();
        let step = &total / &Rat::from_int(k as i64);
        let mut cuts = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let m = &step * &Rat::from_int(i as i64);
            cuts.push(
                self.point_at_measure(&m)
                    .unwrap_or_else(|| self.sup().cloned().unwrap_or_else(Rat::zero)),
            );
        }
        cuts.windows(2).map(|w| self.clip(&w[0], &w[1])).collect()
    }
}

impl From<Interval> for IntervalSet {
    fn from(iv: Interval) -> IntervalSet {
        IntervalSet::new(vec![iv])
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "∅");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A fraction as `(num, den)`.
pub type Frac = (i64, i64);

/// Builds an `IntervalSet` from `(lo, hi)` pairs given as `(num, den)` tuples.
/// Intended for tests and examples.
pub fn set_of(pairs: &[(Frac, Frac)]) -> IntervalSet {
    IntervalSet::new(
        pairs
            .iter()
            .map(|&((a, b), (c, d))| Interval::new(Rat::new(a, b), Rat::new(c, d)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(rat(a.0, a.1), rat(b.0, b.1))
    }

    #[test]
    fn canonical_merges_touching_and_overlapping() {
        let s = IntervalSet::new(vec![iv((1, 2), (3, 4)), iv((0, 1), (1, 2)), iv((5, 8), (7, 8)), iv((1, 1), (1, 1))]);
        assert_eq!(s.pieces(), &[iv((0, 1), (7, 8))]);
        assert_eq!(s.measure(), rat(7, 8));
    }

    #[test]
    fn boolean_ops() {
        let a = set_of(&[((0, 1), (1, 2)), ((3, 4), (1, 1))]);
        let b = set_of(&[((1, 4), (7, 8))]);
        assert_eq!(a.intersection(&b), set_of(&[((1, 4), (1, 2)), ((3, 4), (7, 8))]));
        assert_eq!(a.difference(&b), set_of(&[((0, 1), (1, 4)), ((7, 8), (1, 1))]));
        assert_eq!(a.union(&b), IntervalSet::unit());
        assert!(set_of(&[((1, 8), (1, 4))]).is_subset(&a));
        assert!(!b.is_subset(&a));
    }

    #[test]
    fn measure_queries() {
        let s = set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))]);
        assert_eq!(s.measure_below(&rat(5, 8)), rat(3, 8));
        assert_eq!(s.point_at_measure(&rat(1, 4)), Some(rat(1, 4)));
        assert_eq!(s.point_at_measure(&rat(3, 8)), Some(rat(5, 8)));
        assert_eq!(s.prefix(&rat(3, 8)).unwrap(), set_of(&[((0, 1), (1, 4)), ((1, 2), (5, 8))]));
        assert_eq!(s.suffix(&rat(1, 4)).unwrap(), set_of(&[((1, 2), (3, 4))]));
        assert_eq!(s.suffix(&rat(3, 8)).unwrap(), set_of(&[((1, 8), (1, 4)), ((1, 2), (3, 4))]));
    }

    #[test]
    fn split_equal_parts() {
        let s = set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))]);
        let parts = s.split_equal(4);
        assert_eq!(parts.len(), 4);
        for p in &parts {
            assert_eq!(p.measure(), rat(1, 8));
        }
        assert_eq!(parts[2], set_of(&[((1, 2), (5, 8))]));
    }

    #[test]
    fn contains_half_open() {
        let s = set_of(&[((0, 1), (1, 2))]);
        assert!(s.contains(&rat(0, 1)));
        assert!(!s.contains(&rat(1, 2)));
    }
}
