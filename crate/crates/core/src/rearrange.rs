//! Reordering sequences and matrix rows so that running sums stay bounded.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rat;

/// A permutation of `0..m`. `image()[k]` is the index placed at position `k`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Permutation> {
        let p = Permutation(image);
        if !p.is_valid() {
            return Err(Error::Malformed(format!("{p:?} is not a permutation")));
        }
        Ok(p)
    }

    pub fn identity(m: usize) -> Permutation {
        Permutation((0..m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    /// The image with indices counted from 1.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &i in &self.0 {
            if i >= seen.len() || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &i)| k == i)
    }

    /// `(a[σ(0)], a[σ(1)], …)`.
    pub fn apply<T: Clone>(&self, a: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| a[i].clone()).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (k, &i) in self.0.iter().enumerate() {
            inv[i] = k;
        }
        Permutation(inv)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ{:?}", self.0)
    }
}

pub fn partial_sums(a: &[Rat]) -> Vec<Rat> {
    let mut acc = Rat::zero();
    a.iter()
        .map(|x| {
            acc += x;
            acc.clone()
        })
        .collect()
}

/// Orders a zero-sum sequence so that every partial sum is at most
/// `max |a_k|` in absolute value.
///
/// Starts from the first index, then repeatedly takes the lowest unused index
/// whose value has the opposite sign to the running sum (any unused index when
/// the running sum is zero).
pub fn rearrange_zero_sum(a: &[Rat]) -> Result<Permutation> {
    let total: Rat = a.iter().sum();
    if !total.is_zero() {
        return Err(Error::NonzeroSum(total));
    }
    let n = a.len();
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut acc = Rat::zero();
    for step in 0..n {
        let pick = if step == 0 {
            0
        } else {
            let want = |x: &Rat| match acc.signum() {
                1 => !x.is_positive(),
                -1 => !x.is_negative(),
                _ => true,
            };
            (0..n)
                .find(|&i| !used[i] && want(&a[i]))
                .ok_or_else(|| Error::Invariant(format!("no index of the needed sign remains (running sum {acc})")))?
        };
        used[pick] = true;
        acc += &a[pick];
        order.push(pick);
    }
    let p = Permutation(order);
    let bound = a.iter().map(Rat::abs).max().unwrap_or_default();
    if let Some(bad) = partial_sums(&p.apply(a)).into_iter().find(|s| s.abs() > bound) {
        return Err(Error::Invariant(format!("partial sum {bad} exceeds {bound}")));
    }
    Ok(p)
}

/// How a row of [`rearrange_matrix`] was placed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Sorted pairing kept every column within `C`.
    Greedy,
    /// Augmenting-path matching kept every column within `C`.
    Matching,
    /// Needed a bound between `C` and `2C`; the value is the bound used.
    Relaxed(Rat),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRearrangement {
    /// One permutation per row; column `j` of row `i` receives entry
    /// `a[i][σ_i(j)]`.
    pub permutations: Vec<Permutation>,
    pub tiers: Vec<Tier>,
    /// `C = max |a_ij|`.
    pub bound: Rat,
}

impl MatrixRearrangement {
    /// Column partial sums after each row.
    pub fn column_partials(&self, a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
        let m = self.permutations.first().map_or(0, Permutation::len);
        let mut s = vec![Rat::zero(); m];
        let mut out = Vec::with_capacity(a.len());
        for (row, p) in a.iter().zip(&self.permutations) {
            for (j, &i) in p.image().iter().enumerate() {
                s[j] += &row[i];
            }
            out.push(s.clone());
        }
        out
    }
}

/// Permutes the entries of every row of a matrix with zero row sums so that
/// all column partial sums stay within `2C`, `C = max |a_ij|`.
pub fn rearrange_matrix(a: &[Vec<Rat>]) -> Result<MatrixRearrangement> {
    let m = a.first().map_or(0, Vec::len);
    for (i, row) in a.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Malformed(format!("row {i} has {} entries, expected {m}", row.len())));
        }
        let s: Rat = row.iter().sum();
        if !s.is_zero() {
            return Err(Error::NonzeroSum(s).in_block(format!("row {i}")));
        }
    }
    let c = a.iter().flatten().map(Rat::abs).max().unwrap_or_default();
    let two_c = &c + &c;
    let mut sums = vec![Rat::zero(); m];
    let mut permutations = Vec::with_capacity(a.len());
    let mut tiers = Vec::with_capacity(a.len());

    for (i, row) in a.iter().enumerate() {
        let (perm, tier) = if let Some(p) = greedy_row(&sums, row, &c) {
            (p, Tier::Greedy)
        } else if let Some(p) = match_row(&sums, row, &c) {
            (p, Tier::Matching)
        } else {
            let mut found = None;
            for r in 1..=8 {
                let b = &c * Rat::new(8 + r, 8);
                if let Some(p) = match_row(&sums, row, &b) {
                    found = Some((p, Tier::Relaxed(b)));
                    break;
                }
            }
            found.ok_or_else(|| Error::SearchExhausted(format!("row {i}: no assignment keeps the columns within 2C = {two_c}")))?
        };
        for (j, &k) in perm.image().iter().enumerate() {
            sums[j] += &row[k];
            if sums[j].abs() > two_c {
                return Err(Error::Invariant(format!("column {j} partial sum {} exceeds 2C = {two_c}", sums[j])));
            }
        }
        permutations.push(perm);
        tiers.push(tier);
    }
    Ok(MatrixRearrangement {
        permutations,
        tiers,
        bound: c,
    })
}

/// Columns with the smallest running sum receive the largest entries.
fn greedy_row(sums: &[Rat], row: &[Rat], bound: &Rat) -> Option<Permutation> {
    let m = row.len();
    let mut cols: Vec<usize> = (0..m).collect();
    cols.sort_by(|&x, &y| sums[x].cmp(&sums[y]).then(x.cmp(&y)));
    let mut entries: Vec<usize> = (0..m).collect();
    entries.sort_by(|&x, &y| match row[y].cmp(&row[x]) {
        Ordering::Equal => x.cmp(&y),
        o => o,
    });
    let mut image = vec![0; m];
    for (&j, &k) in cols.iter().zip(&entries) {
        if (&sums[j] + &row[k]).abs() > *bound {
            return None;
        }
        image[j] = k;
    }
    Some(Permutation(image))
}

/// Perfect matching of columns to entries with `|S_j + a_k| ≤ bound`.
fn match_row(sums: &[Rat], row: &[Rat], bound: &Rat) -> Option<Permutation> {
    let m = row.len();
    let ok: Vec<Vec<bool>> = (0..m)
        .map(|j| (0..m).map(|k| (&sums[j] + &row[k]).abs() <= *bound).collect())
        .collect();
    let mut entry_of_col: Vec<Option<usize>> = vec![None; m];
    let mut col_of_entry: Vec<Option<usize>> = vec![None; m];

    fn augment(
        j: usize,
        ok: &[Vec<bool>],
        seen: &mut [bool],
        entry_of_col: &mut [Option<usize>],
        col_of_entry: &mut [Option<usize>],
    ) -> bool {
        for k in 0..ok.len() {
            if !ok[j][k] || seen[k] {
                continue;
            }
            seen[k] = true;
            let free = match col_of_entry[k] {
                None => true,
                Some(j2) => augment(j2, ok, seen, entry_of_col, col_of_entry),
            };
            if free {
                entry_of_col[j] = Some(k);
                col_of_entry[k] = Some(j);
                return true;
            }
        }
        false
    }

    for j in 0..m {
        let mut seen = vec![false; m];
        if !augment(j, &ok, &mut seen, &mut entry_of_col, &mut col_of_entry) {
            return None;
        }
    }
    Some(Permutation(entry_of_col.into_iter().map(Option::unwrap).collect()))
}
