#![allow(dead_code)]

use coboundary::{Rat, StepFunction, StepPiece};
use rand::Rng;

pub fn random_rat<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> Rat {
    Rat::new(rng.gen_range(-max_num..=max_num), rng.gen_range(1..=max_den))
}

/// Sorted distinct cut points strictly inside (0, 1), all multiples of 1/den.
pub fn random_cuts<R: Rng>(rng: &mut R, count: usize, den: i64) -> Vec<Rat> {
    let mut ks: Vec<i64> = (0..count).map(|_| rng.gen_range(1..den)).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter().map(|k| Rat::new(k, den)).collect()
}

/// Mean-zero step function on [0, 1) with at most `max_pieces` pieces.
pub fn random_step<R: Rng>(rng: &mut R, max_pieces: usize, max_den: i64) -> StepFunction {
    let pieces = rng.gen_range(2..=max_pieces);
    let den = rng.gen_range(pieces as i64 + 1..=max_den);
    let mut pts = vec![Rat::zero()];
    pts.extend(random_cuts(rng, pieces - 1, den));
    pts.push(Rat::one());
    let values: Vec<Rat> = (1..pts.len()).map(|_| random_rat(rng, 50, 40)).collect();
    let mean: Rat = pts.windows(2).zip(&values).map(|(w, v)| v * (&w[1] - &w[0])).sum();
    let f = StepFunction::new(
        pts.windows(2)
            .zip(&values)
            .map(|(w, v)| StepPiece::new(w[0].clone(), w[1].clone(), v - &mean))
            .collect(),
    )
    .expect("valid pieces");
    assert!(f.integral().is_zero());
    f
}

pub fn random_zero_sum<R: Rng>(rng: &mut R, n: usize) -> Vec<Rat> {
    let mut a: Vec<Rat> = (0..n.saturating_sub(1)).map(|_| random_rat(rng, 20, 6)).collect();
    let s: Rat = a.iter().sum();
    a.push(-s);
    let k = rng.gen_range(0..n);
    a.swap(k, n - 1);
    a
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<Vec<Rat>> {
    (0..n).map(|_| random_zero_sum(rng, m)).collect()
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
