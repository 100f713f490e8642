//! Interval exchange transformations: finite piecewise translations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::rational::Rat;

/// `src` is translated onto `dst`; both have the same length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExchangePiece {
    pub src: Interval,
    pub dst: Interval,
}

impl ExchangePiece {
    pub fn new(src: Interval, dst: Interval) -> ExchangePiece {
        ExchangePiece { src, dst }
    }

    /// Translation amount `dst.lo − src.lo`.
    pub fn shift(&self) -> Rat {
        &self.dst.lo - &self.src.lo
    }
}

/// A piecewise translation, stored sorted by source.
///
/// Most exchanges here map their domain onto itself; packings such as
/// [`IntervalExchange::canonical_pack`] map a set onto a different one, so the
/// type tracks the image (`codomain`) separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalExchange {
    pieces: Vec<ExchangePiece>,
}

impl<'de> Deserialize<'de> for IntervalExchange {
    /// Deserialization does not validate: the verifier must be able to read
    /// broken exchanges and report what is wrong with them.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            pieces: Vec<ExchangePiece>,
        }
        let raw = Raw::deserialize(d)?;
        for p in &raw.pieces {
            if p.src.lo > p.src.hi || p.dst.lo > p.dst.hi {
                return Err(serde::de::Error::custom("exchange piece with lo > hi"));
            }
        }
        Ok(IntervalExchange::from_pieces_unchecked(raw.pieces))
    }
}

/// Outcome of [`IntervalExchange::verify_measure_preserving`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub pass: bool,
    pub total_measure: Rat,
    pub piece_count: usize,
    pub failures: Vec<String>,
}

impl IntervalExchange {
    /// Validates lengths and disjointness of sources and of targets, then
    /// canonicalizes (sorted, empty pieces dropped, contiguous pieces with
    /// the same translation merged).
    pub fn new(pieces: Vec<ExchangePiece>) -> Result<IntervalExchange> {
        let t = IntervalExchange::from_pieces_unchecked(pieces);
        let mut problems = t.structural_failures();
        if let Some(p) = problems.drain(..).next() {
            return Err(Error::Malformed(p));
        }
        Ok(t.canonical())
    }

    /// Keeps the pieces as given (only sorted by source). Use for negative
    /// tests and for reading untrusted certificates.
    pub fn from_pieces_unchecked(mut pieces: Vec<ExchangePiece>) -> IntervalExchange {
        pieces.sort_by(|a, b| a.src.lo.cmp(&b.src.lo).then(a.src.hi.cmp(&b.src.hi)));
        IntervalExchange { pieces }
    }

    fn canonical(self) -> IntervalExchange {
        let mut out: Vec<ExchangePiece> = Vec::with_capacity(self.pieces.len());
        for p in self.pieces {
            if p.src.is_empty() {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if last.src.hi == p.src.lo && last.dst.hi == p.dst.lo {
                    last.src.hi = p.src.hi;
                    last.dst.hi = p.dst.hi;
                    continue;
                }
            }
            out.push(p);
        }
        IntervalExchange { pieces: out }
    }

    pub fn identity(domain: &IntervalSet) -> IntervalExchange {
        IntervalExchange {
            pieces: domain.pieces().iter().map(|p| ExchangePiece::new(p.clone(), p.clone())).collect(),
        }
    }

    /// `t ↦ {t − a}` on `[0, 1)`.
    pub fn rotation(a: &Rat) -> Result<IntervalExchange> {
        if a.is_negative() || a > &Rat::one() {
            return Err(Error::Precondition(format!("rotation amount {a} is outside [0, 1]")));
        }
        let one = Rat::one();
        let pieces = vec![
            ExchangePiece::new(Interval::new(Rat::zero(), a.clone()), Interval::new(&one - a, one.clone())),
            ExchangePiece::new(Interval::new(a.clone(), one.clone()), Interval::new(Rat::zero(), &one - a)),
        ];
        IntervalExchange::new(pieces)
    }

    /// Order-preserving packing of `S` onto `[0, λ(S))`.
    pub fn canonical_pack(s: &IntervalSet) -> Result<IntervalExchange> {
        if s.is_empty() {
            return Err(Error::Degenerate("cannot pack an empty set".into()));
        }
        let target = IntervalSet::interval(Rat::zero(), s.measure());
        IntervalExchange::between(s, &target)
    }

    /// Order-preserving piecewise translation of `from` onto `to`; both sets
    /// must have the same measure.
    pub fn between(from: &IntervalSet, to: &IntervalSet) -> Result<IntervalExchange> {
        let (mf, mt) = (from.measure(), to.measure());
        if mf != mt {
            return Err(Error::Precondition(format!(
                "cannot map a set of measure {mf} onto one of measure {mt}"
            )));
        }
        let a = from.pieces();
        let b = to.pieces();
        let mut pieces = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let (mut x, mut y) = match (a.first(), b.first()) {
            (Some(p), Some(q)) => (p.lo.clone(), q.lo.clone()),
            _ => return Ok(IntervalExchange { pieces }),
        };
        while i < a.len() && j < b.len() {
            let ra = &a[i].hi - &x;
            let rb = &b[j].hi - &y;
            let len = Rat::min_of(&ra, &rb).clone();
            pieces.push(ExchangePiece::new(
                Interval::new(x.clone(), &x + &len),
                Interval::new(y.clone(), &y + &len),
            ));
            x += &len;
            y += &len;
            if x == a[i].hi {
                i += 1;
                if i < a.len() {
                    x = a[i].lo.clone();
                }
            }
            if y == b[j].hi {
                j += 1;
                if j < b.len() {
                    y = b[j].lo.clone();
                }
            }
        }
        Ok(IntervalExchange { pieces }.canonical())
    }

    pub fn pieces(&self) -> &[ExchangePiece] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn domain(&self) -> IntervalSet {
        IntervalSet::new(self.pieces.iter().map(|p| p.src.clone()).collect())
    }

    pub fn codomain(&self) -> IntervalSet {
        IntervalSet::new(self.pieces.iter().map(|p| p.dst.clone()).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.iter().all(|p| p.src == p.dst)
    }

    fn piece_index(&self, x: &Rat) -> Option<usize> {
        let idx = self.pieces.partition_point(|p| &p.src.lo <= x);
        let i = idx.checked_sub(1)?;
        self.pieces[i].src.contains(x).then_some(i)
    }

    /// The translated image of `x`. Points outside every source are the
    /// finite exceptional set and produce an error.
    pub fn apply(&self, x: &Rat) -> Result<Rat> {
        let i = self.piece_index(x).ok_or_else(|| Error::UndefinedPoint(x.clone()))?;
        Ok(x + &self.pieces[i].shift())
    }

    pub fn invert(&self) -> IntervalExchange {
        IntervalExchange::from_pieces_unchecked(
            self.pieces
                .iter()
                .map(|p| ExchangePiece::new(p.dst.clone(), p.src.clone()))
                .collect(),
        )
        .canonical()
    }

    /// `t2 ∘ t1`. The image of `t1` must equal the domain of `t2`.
    pub fn compose(t2: &IntervalExchange, t1: &IntervalExchange) -> Result<IntervalExchange> {
        let img = t1.codomain();
        let dom = t2.domain();
        if img != dom {
            return Err(Error::DomainMismatch(format!(
                "cannot compose: image {img} differs from domain {dom}"
            )));
        }
        let mut pieces = Vec::new();
        for p in &t1.pieces {
            let d1 = p.shift();
            let start = t2.pieces.partition_point(|q| q.src.hi <= p.dst.lo);
            for q in &t2.pieces[start..] {
                if q.src.lo >= p.dst.hi {
                    break;
                }
                if let Some(ov) = p.dst.intersect(&q.src) {
                    let d2 = q.shift();
                    pieces.push(ExchangePiece::new(ov.translate(&-&d1), ov.translate(&d2)));
                }
            }
        }
        Ok(IntervalExchange::from_pieces_unchecked(pieces).canonical())
    }

    /// `s⁻¹ ∘ t ∘ s`: transports `t` (acting on the image of `s`) back to the
    /// domain of `s`.
    pub fn conjugate(t: &IntervalExchange, s: &IntervalExchange) -> Result<IntervalExchange> {
        let inner = IntervalExchange::compose(t, s)?;
        IntervalExchange::compose(&s.invert(), &inner)
    }

    /// Exact image of `S ⊆ domain`.
    pub fn map_set(&self, s: &IntervalSet) -> Result<IntervalSet> {
        if !s.is_subset(&self.domain()) {
            return Err(Error::DomainMismatch(format!("set {s} is not inside the exchange's domain")));
        }
        let mut out = Vec::new();
        for iv in s.pieces() {
            let start = self.pieces.partition_point(|q| q.src.hi <= iv.lo);
            for q in &self.pieces[start..] {
                if q.src.lo >= iv.hi {
                    break;
                }
                if let Some(ov) = iv.intersect(&q.src) {
                    out.push(ov.translate(&q.shift()));
                }
            }
        }
        Ok(IntervalSet::new(out))
    }

    /// Union of exchanges with pairwise disjoint domains and images.
    pub fn glue(parts: &[IntervalExchange]) -> Result<IntervalExchange> {
        let pieces: Vec<ExchangePiece> = parts.iter().flat_map(|t| t.pieces.iter().cloned()).collect();
        IntervalExchange::new(pieces)
    }

    /// Source endpoints, sorted.
    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut pts: Vec<Rat> = self.pieces.iter().flat_map(|p| [p.src.lo.clone(), p.src.hi.clone()]).collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// Preimages of the given points under each piece (points on a target's
    /// closed hull included), so a refinement of the sources makes `f ∘ T`
    /// affine on each atom whenever `f` is affine between `points`.
    pub fn preimages(&self, points: &[Rat]) -> Vec<Rat> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let d = p.shift();
            let start = points.partition_point(|y| y < &p.dst.lo);
            for y in &points[start..] {
                if y > &p.dst.hi {
                    break;
                }
                out.push(y - &d);
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn structural_failures(&self) -> Vec<String> {
        let mut failures = Vec::new();
        for p in &self.pieces {
            if p.src.length() != p.dst.length() {
                failures.push(format!(
                    "piece {} -> {} changes length from {} to {}",
                    p.src,
                    p.dst,
                    p.src.length(),
                    p.dst.length()
                ));
            }
        }
        let mut by_src: Vec<&ExchangePiece> = self.pieces.iter().filter(|p| !p.src.is_empty()).collect();
        by_src.sort_by(|a, b| a.src.lo.cmp(&b.src.lo));
        for w in by_src.windows(2) {
            if w[0].src.hi > w[1].src.lo {
                failures.push(format!("sources {} and {} overlap", w[0].src, w[1].src));
            }
        }
        let mut by_dst: Vec<&ExchangePiece> = self.pieces.iter().filter(|p| !p.dst.is_empty()).collect();
        by_dst.sort_by(|a, b| a.dst.lo.cmp(&b.dst.lo));
        for w in by_dst.windows(2) {
            if w[0].dst.hi > w[1].dst.lo {
                failures.push(format!(
                    "targets {} (from {}) and {} (from {}) overlap",
                    w[0].dst, w[0].src, w[1].dst, w[1].src
                ));
            }
        }
        failures
    }

    /// Checks equal lengths, disjoint sources, disjoint targets, and that
    /// the targets cover exactly the domain. Never errors; problems are
    /// listed in the report.
    pub fn verify_measure_preserving(&self) -> MeasureReport {
        let mut failures = self.structural_failures();
        let dom = self.domain();
        let img = self.codomain();
        if dom != img {
            failures.push(format!("targets cover {img} but the domain is {dom}"));
        }
        MeasureReport {
            pass: failures.is_empty(),
            total_measure: dom.measure(),
            piece_count: self.pieces.len(),
            failures,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::set_of;
    use crate::rational::rat;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(rat(a.0, a.1), rat(b.0, b.1))
    }

    #[test]
    fn rotation_pieces() {
        let t = IntervalExchange::rotation(&rat(1, 3)).unwrap();
        assert_eq!(
            t.pieces(),
            &[
                ExchangePiece::new(iv((0, 1), (1, 3)), iv((2, 3), (1, 1))),
                ExchangePiece::new(iv((1, 3), (1, 1)), iv((0, 1), (2, 3))),
            ]
        );
        assert_eq!(t.apply(&Rat::zero()).unwrap(), rat(2, 3));
        assert!(IntervalExchange::rotation(&rat(3, 2)).is_err());
        assert!(IntervalExchange::rotation(&Rat::zero()).unwrap().is_identity());
    }

    #[test]
    fn half_rotation_is_involution() {
        let t = IntervalExchange::rotation(&rat(1, 2)).unwrap();
        let tt = IntervalExchange::compose(&t, &t).unwrap();
        assert!(tt.is_identity());
        assert_eq!(tt, IntervalExchange::identity(&IntervalSet::unit()));
    }

    #[test]
    fn pack_examples() {
        let p = IntervalExchange::canonical_pack(&set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))])).unwrap();
        assert_eq!(
            p.pieces(),
            &[
                ExchangePiece::new(iv((0, 1), (1, 4)), iv((0, 1), (1, 4))),
                ExchangePiece::new(iv((1, 2), (3, 4)), iv((1, 4), (1, 2))),
            ]
        );
        assert!(IntervalExchange::canonical_pack(&IntervalSet::unit()).unwrap().is_identity());
        let h = IntervalExchange::canonical_pack(&set_of(&[((1, 2), (1, 1))])).unwrap();
        assert_eq!(h.apply(&rat(3, 4)).unwrap(), rat(1, 4));
        assert!(IntervalExchange::canonical_pack(&IntervalSet::empty()).is_err());
    }

    #[test]
    fn invert_and_compose() {
        let r1 = IntervalExchange::rotation(&rat(1, 3)).unwrap();
        let r2 = IntervalExchange::rotation(&rat(2, 3)).unwrap();
        assert_eq!(r1.invert(), r2);
        assert_eq!(IntervalExchange::compose(&r1, &r1).unwrap(), r2);
        assert!(IntervalExchange::compose(&r1, &r1.invert()).unwrap().is_identity());
        assert_eq!(r1.invert().invert(), r1);
        let id = IntervalExchange::identity(&IntervalSet::unit());
        assert_eq!(IntervalExchange::compose(&id, &r1).unwrap(), r1);
    }

    #[test]
    fn compose_rejects_mismatched_domains() {
        let r = IntervalExchange::rotation(&rat(1, 3)).unwrap();
        let id = IntervalExchange::identity(&set_of(&[((0, 1), (1, 2))]));
        assert!(matches!(IntervalExchange::compose(&id, &r), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn map_set_examples() {
        let r = IntervalExchange::rotation(&rat(1, 3)).unwrap();
        assert_eq!(r.map_set(&set_of(&[((0, 1), (1, 3))])).unwrap(), set_of(&[((2, 3), (1, 1))]));
        let h = IntervalExchange::rotation(&rat(1, 2)).unwrap();
        let s = set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))]);
        assert_eq!(h.map_set(&s).unwrap(), s);
        assert!(r.map_set(&set_of(&[((1, 2), (3, 2))])).is_err());
    }

    #[test]
    fn verify_reports_overlapping_targets() {
        let bad = IntervalExchange::from_pieces_unchecked(vec![
            ExchangePiece::new(iv((0, 1), (1, 2)), iv((0, 1), (1, 2))),
            ExchangePiece::new(iv((1, 2), (1, 1)), iv((1, 4), (3, 4))),
        ]);
        let rep = bad.verify_measure_preserving();
        assert!(!rep.pass);
        assert!(rep.failures.iter().any(|f| f.contains("overlap")));
        assert!(IntervalExchange::rotation(&rat(2, 5)).unwrap().verify_measure_preserving().pass);
    }

    #[test]
    fn between_maps_in_order() {
        let from = set_of(&[((0, 1), (1, 4)), ((1, 2), (3, 4))]);
        let to = set_of(&[((1, 8), (1, 2)), ((7, 8), (1, 1))]);
        let t = IntervalExchange::between(&from, &to).unwrap();
        assert_eq!(t.codomain(), to);
        assert_eq!(t.apply(&rat(1, 2)).unwrap(), rat(3, 8));
        assert_eq!(t.apply(&rat(5, 8)).unwrap(), rat(7, 8));
    }
}
