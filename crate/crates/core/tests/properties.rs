use coboundary::exchange::ExchangePiece;
use coboundary::rearrange::partial_sums;
use coboundary::{rearrange_matrix, rearrange_zero_sum, solve_step, Interval, IntervalExchange, IntervalSet, Rat, StepFunction, StepPiece};
use proptest::prelude::*;

const DEN: i64 = 48;

fn grid(k: i64) -> Rat {
    Rat::new(k, DEN)
}

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0..DEN, 1..12i64), 0..6)
        .prop_map(|v| IntervalSet::new(v.into_iter().map(|(a, l)| Interval::new(grid(a), grid((a + l).min(DEN)))).collect()))
}

/// Cut points `0 = p_0 < … < p_n = 1` on the grid.
fn partition() -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::btree_set(1..DEN, 0..8).prop_map(|s| {
        let mut pts = vec![Rat::zero()];
        pts.extend(s.into_iter().map(grid));
        pts.push(Rat::one());
        pts
    })
}

/// Exchange of [0, 1) that lays the pieces of a partition down in a shuffled order.
fn exchange() -> impl Strategy<Value = IntervalExchange> {
    partition()
        .prop_flat_map(|pts| {
            let n = pts.len() - 1;
            (Just(pts), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(pts, order)| {
            let mut at = Rat::zero();
            let mut pieces = Vec::new();
            for i in order {
                let src = Interval::new(pts[i].clone(), pts[i + 1].clone());
                let dst = src.translate(&(&at - &src.lo));
                at = dst.hi.clone();
                pieces.push(ExchangePiece::new(src, dst));
            }
            IntervalExchange::new(pieces).unwrap()
        })
}

fn zero_sum(max_len: usize) -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((-30i64..=30, 1i64..=5), 1..max_len).prop_map(|v| {
        let mut a: Vec<Rat> = v.into_iter().map(|(p, q)| Rat::new(p, q)).collect();
        let s: Rat = a.iter().sum();
        a.push(-s);
        a
    })
}

fn mean_zero_step() -> impl Strategy<Value = StepFunction> {
    partition()
        .prop_flat_map(|pts| {
            let n = pts.len() - 1;
            (Just(pts), prop::collection::vec((-20i64..=20, 1i64..=6), n))
        })
        .prop_map(|(pts, vals)| {
            let raw: Vec<Rat> = vals.into_iter().map(|(p, q)| Rat::new(p, q)).collect();
            let mean: Rat = pts.windows(2).zip(&raw).map(|(w, v)| v * (&w[1] - &w[0])).sum();
            StepFunction::new(
                pts.windows(2)
                    .zip(&raw)
                    .map(|(w, v)| StepPiece::new(w[0].clone(), w[1].clone(), v - &mean))
                    .collect(),
            )
            .unwrap()
        })
}

fn probe() -> impl Strategy<Value = Rat> {
    (0..997i64).prop_map(|k| Rat::new(k, 997))
}

proptest! {
    #[test]
    fn set_algebra_is_consistent(a in interval_set(), b in interval_set()) {
        let union = a.union(&b);
        let inter = a.intersection(&b);
        prop_assert!(union.is_canonical() && inter.is_canonical());
        prop_assert_eq!(union.measure() + inter.measure(), a.measure() + b.measure());
        let diff = a.difference(&b);
        prop_assert!(diff.is_disjoint(&b));
        prop_assert_eq!(diff.union(&inter), a.clone());
        prop_assert!(inter.is_subset(&a) && a.is_subset(&union));
    }

    #[test]
    fn prefix_and_suffix_split_the_measure(a in interval_set(), num in 0i64..=100) {
        let m = a.measure() * Rat::new(num, 100);
        let p = a.prefix(&m).unwrap();
        let s = a.suffix(&(a.measure() - &m)).unwrap();
        prop_assert_eq!(p.measure(), m);
        prop_assert!(p.is_disjoint(&s));
        prop_assert_eq!(p.union(&s), a);
    }

    #[test]
    fn exchange_inverse_undoes_it(t in exchange(), x in probe()) {
        let y = t.apply(&x).unwrap();
        prop_assert_eq!(t.invert().apply(&y).unwrap(), x);
        prop_assert!(t.verify_measure_preserving().pass);
    }

    #[test]
    fn composition_applies_right_to_left(t1 in exchange(), t2 in exchange(), x in probe()) {
        let c = IntervalExchange::compose(&t2, &t1).unwrap();
        prop_assert_eq!(c.apply(&x).unwrap(), t2.apply(&t1.apply(&x).unwrap()).unwrap());
        prop_assert!(c.verify_measure_preserving().pass);
    }

    #[test]
    fn map_set_preserves_measure(t in exchange(), a in interval_set()) {
        let a = a.intersection(&IntervalSet::unit());
        let image = t.map_set(&a).unwrap();
        prop_assert_eq!(image.measure(), a.measure());
        prop_assert_eq!(t.invert().map_set(&image).unwrap(), a);
    }

    #[test]
    fn zero_sum_prefixes_stay_bounded(a in zero_sum(40)) {
        let p = rearrange_zero_sum(&a).unwrap();
        prop_assert!(p.is_valid());
        let c = a.iter().map(Rat::abs).max().unwrap();
        for s in partial_sums(&p.apply(&a)) {
            prop_assert!(s.abs() <= c);
        }
    }

    #[test]
    fn matrix_columns_stay_within_twice_the_max(
        rows in prop::collection::vec(zero_sum(8), 1..8).prop_filter("equal widths", |r| r.iter().all(|x| x.len() == r[0].len()))
    ) {
        let r = rearrange_matrix(&rows).unwrap();
        let c = rows.iter().flatten().map(Rat::abs).max().unwrap();
        let two_c = &c + &c;
        for col in r.column_partials(&rows) {
            for s in col {
                prop_assert!(s.abs() <= two_c);
            }
        }
    }

    #[test]
    fn step_solver_satisfies_the_identity(f in mean_zero_step(), x in probe()) {
        let cert = solve_step(&f).unwrap();
        let tx = cert.t.apply(&x).unwrap();
        let lhs = cert.g.value_at(&tx).unwrap() - cert.g.value_at(&x).unwrap();
        prop_assert_eq!(&lhs, f.value_at(&x).unwrap());
        let norm_f = f.pieces().iter().map(|p| p.value.abs()).max().unwrap();
        for p in cert.g.pieces() {
            prop_assert!((&p.slope * &p.lo + &p.intercept).abs() <= norm_f);
            prop_assert!((&p.slope * &p.hi + &p.intercept).abs() <= norm_f);
        }
    }

    #[test]
    fn pull_back_evaluates_through_the_exchange(f in mean_zero_step(), t in exchange(), x in probe()) {
        let g = f.to_affine().pull_back(&t).unwrap();
        let tx = t.apply(&x).unwrap();
        prop_assert_eq!(g.value_at(&x).unwrap(), f.to_affine().value_at(&tx).unwrap());
    }
}
