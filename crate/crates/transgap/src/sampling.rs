//! Permutations, supersamples, selector sequences, and the map between them.
//!
//! A split of `n = m(k+1)` indices into `m` train and `u = km` test positions
//! can be drawn two ways:
//!
//! 1. Directly: a uniform permutation `Z` of `{1, ..., n}` whose first `m`
//!    entries are the training indices.
//! 2. Factored: a supersample `Z~` (m disjoint rows of k+1 ascending indices
//!    partitioning `{1, ..., n}`, rows in sampling order) together with a
//!    selector sequence `U` (one uniform permutation of `(0, ..., k)` per
//!    row). Row i trains on slot `U[i][0]`; the remaining slots are test.
//!
//! [`induce_permutation`] realizes the second form as the first: position
//! `i` of the result holds `Z~[i][U[i][0]]` for `i` in `1..=m`, and position
//! `j*m + i` holds `Z~[i][U[i][j]]` for `j` in `1..=k`. Over the enumerations
//! below this map is a bijection onto all `n!` permutations, which is what
//! makes gap statistics computed in either parameterization agree exactly.
//!
//! All indices are 1-based, including in serialized form. Enumeration order
//! is lexicographic so oracle outputs are byte-stable.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on `n` for the enumeration oracles; n! at 10 is 3.6M.
pub const ENUMERATION_MAX_N: usize = 10;

/// An ordering of `{1, ..., n}` with a training prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermutationSequence {
    /// 1-based indices; a permutation of `{1, ..., n}`.
    pub entries: Vec<usize>,
    /// Number of leading entries that are training positions.
    pub split_m: usize,
}

impl PermutationSequence {
    pub fn new(entries: Vec<usize>, split_m: usize) -> Result<Self> {
        let n = entries.len();
        if split_m < 1 || split_m >= n {
            return Err(Error::SplitOutOfRange { m: split_m, n });
        }
        let mut seen = vec![false; n + 1];
        for &e in &entries {
            if e < 1 || e > n || seen[e] {
                return Err(Error::invalid(format!(
                    "entries are not a permutation of 1..={n}: offending value {e}"
                )));
            }
            seen[e] = true;
        }
        Ok(Self { entries, split_m })
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Training indices: the first `split_m` entries.
    pub fn train(&self) -> &[usize] {
        &self.entries[..self.split_m]
    }

    /// Test indices: everything after the training prefix.
    pub fn test(&self) -> &[usize] {
        &self.entries[self.split_m..]
    }

    /// Test-average minus train-average of a per-index loss table.
    ///
    /// `losses[i - 1]` is the loss of 1-based index `i`.
    pub fn gap(&self, losses: &[f64]) -> Result<f64> {
        if losses.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: format!("loss table has {} entries, split has n = {}", losses.len(), self.n()),
            });
        }
        let train_sum: f64 = self.train().iter().map(|&i| losses[i - 1]).sum();
        let test_sum: f64 = self.test().iter().map(|&i| losses[i - 1]).sum();
        let u = self.n() - self.split_m;
        Ok(test_sum / u as f64 - train_sum / self.split_m as f64)
    }
}

/// `m` disjoint ascending rows of `k+1` indices partitioning `{1, ..., m(k+1)}`.
///
/// Rows keep their sampling-round order; two supersamples with the same rows
/// in different order are distinct values. That distinction is load-bearing:
/// the pair enumeration below covers each of the `(m(k+1))!` permutations
/// exactly once only because row order is kept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Supersample {
    pub rows: Vec<Vec<usize>>,
    pub k: usize,
}

impl Supersample {
    pub fn new(rows: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let m = rows.len();
        if m == 0 || k == 0 {
            return Err(Error::invalid("supersample needs m >= 1 and k >= 1"));
        }
        let n = m * (k + 1);
        let mut seen = vec![false; n + 1];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::RowWidthMismatch {
                    row: r + 1,
                    expected: k + 1,
                    got: row.len(),
                });
            }
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::invalid(format!(
                        "row {} is not strictly ascending: {:?}",
                        r + 1,
                        row
                    )));
                }
            }
            for &e in row {
                if e < 1 || e > n || seen[e] {
                    return Err(Error::invalid(format!(
                        "rows do not partition 1..={n}: offending value {e} in row {}",
                        r + 1
                    )));
                }
                seen[e] = true;
            }
        }
        Ok(Self { rows, k })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.m() * (self.k + 1)
    }
}

/// One permutation of `(0, ..., k)` per supersample row. For `k = 1` each row
/// is fully described by its first element, a bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectorSequence {
    pub rows: Vec<Vec<usize>>,
}

impl SelectorSequence {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("selector sequence needs at least one row"));
        }
        let width = rows[0].len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RowWidthMismatch {
                    row: r + 1,
                    expected: width,
                    got: row.len(),
                });
            }
            let mut seen = vec![false; width];
            for &e in row {
                if e >= width || seen[e] {
                    return Err(Error::invalid(format!(
                        "row {} is not a permutation of 0..{}: {:?}",
                        r + 1,
                        width,
                        row
                    )));
                }
                seen[e] = true;
            }
        }
        Ok(Self { rows })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len() - 1
    }
}

/// Uniform ordering of `{1, ..., n}` with training prefix `m`.
pub fn sample_permutation<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<PermutationSequence> {
    if m < 1 || m >= n {
        return Err(Error::SplitOutOfRange { m, n });
    }
    let mut entries: Vec<usize> = (1..=n).collect();
    entries.shuffle(rng);
    Ok(PermutationSequence { entries, split_m: m })
}

/// Draws a supersample: `m` rounds of sampling `k+1` indices without
/// replacement from `{1, ..., m(k+1)}`, each round sorted ascending.
pub fn sample_supersample<R: Rng>(m: usize, k: usize, rng: &mut R) -> Result<Supersample> {
    if m < 1 || k < 1 {
        return Err(Error::invalid("supersample sampling needs m >= 1 and k >= 1"));
    }
    let n = m * (k + 1);
    let mut pool: Vec<usize> = (1..=n).collect();
    pool.shuffle(rng);
    let mut rows = Vec::with_capacity(m);
    for chunk in pool.chunks(k + 1) {
        let mut row = chunk.to_vec();
        row.sort_unstable();
        rows.push(row);
    }
    Ok(Supersample { rows, k })
}

/// Draws `m` independent uniform permutations of `(0, ..., k)`.
pub fn sample_selectors<R: Rng>(m: usize, k: usize, rng: &mut R) -> Result<SelectorSequence> {
    if m < 1 || k < 1 {
        return Err(Error::invalid("selector sampling needs m >= 1 and k >= 1"));
    }
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row: Vec<usize> = (0..=k).collect();
        row.shuffle(rng);
        rows.push(row);
    }
    Ok(SelectorSequence { rows })
}

/// The permutation a (supersample, selector) pair stands for.
///
/// Position `i` (1-based, `i <= m`) holds `rows[i][u[i][0]]`; position
/// `j*m + i` for `j` in `1..=k` holds `rows[i][u[i][j]]`. The training prefix
/// is `m`.
pub fn induce_permutation(
    supersample: &Supersample,
    selectors: &SelectorSequence,
) -> Result<PermutationSequence> {
    let m = supersample.m();
    if selectors.m() != m {
        return Err(Error::RowCountMismatch {
            supersample_rows: m,
            selector_rows: selectors.m(),
        });
    }
    let k = supersample.k;
    if selectors.k() != k {
        return Err(Error::RowWidthMismatch {
            row: 1,
            expected: k + 1,
            got: selectors.k() + 1,
        });
    }
    let n = supersample.n();
    let mut entries = vec![0usize; n];
    for i in 0..m {
        for j in 0..=k {
            entries[j * m + i] = supersample.rows[i][selectors.rows[i][j]];
        }
    }
    Ok(PermutationSequence { entries, split_m: m })
}

/// All `n!` orderings of `{1, ..., n}` with training prefix `m`, in
/// lexicographic order of the entry vector.
pub fn enumerate_permutations(
    n: usize,
    m: usize,
) -> Result<impl Iterator<Item = PermutationSequence>> {
    if n > ENUMERATION_MAX_N {
        return Err(Error::EnumerationTooLarge {
            n,
            max: ENUMERATION_MAX_N,
        });
    }
    if m < 1 || m >= n {
        return Err(Error::SplitOutOfRange { m, n });
    }
    let first: Vec<usize> = (1..=n).collect();
    Ok(std::iter::successors(Some(first), |prev| {
        let mut next = prev.clone();
        next_permutation(&mut next).then_some(next)
    })
    .map(move |entries| PermutationSequence { entries, split_m: m }))
}

/// In-place lexicographic successor; false when `v` was the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every (supersample, selector) pair for the given `m` and `k`, exactly
/// once, lexicographic in (rows, selector rows). The total count is
/// `(m(k+1))!`: there are `(m(k+1))! / ((k+1)!)^m` supersample values and
/// `((k+1)!)^m` selector sequences.
pub fn enumerate_supersample_selector_pairs(
    m: usize,
    k: usize,
) -> Result<impl Iterator<Item = (Supersample, SelectorSequence)>> {
    let n = m
        .checked_mul(k + 1)
        .ok_or_else(|| Error::invalid("m * (k + 1) overflows"))?;
    if n > ENUMERATION_MAX_N {
        return Err(Error::EnumerationTooLarge {
            n,
            max: ENUMERATION_MAX_N,
        });
    }
    if m < 1 || k < 1 {
        return Err(Error::invalid("enumeration needs m >= 1 and k >= 1"));
    }

    let mut supersamples = Vec::new();
    let mut rows = Vec::with_capacity(m);
    let mut used = vec![false; n + 1];
    collect_supersamples(m, k, n, &mut used, &mut rows, &mut supersamples);

    let mut selector_rows_choices: Vec<Vec<usize>> = Vec::new();
    let mut row: Vec<usize> = (0..=k).collect();
    loop {
        selector_rows_choices.push(row.clone());
        if !next_permutation(&mut row) {
            break;
        }
    }

    let per_row = selector_rows_choices.len();
    let total_selectors = per_row.pow(m as u32);
    Ok(supersamples.into_iter().flat_map(move |ss| {
        let choices = selector_rows_choices.clone();
        (0..total_selectors).map(move |mut code| {
            // Mixed-radix decode, most significant digit = row 0, so the
            // stream is lexicographic in the selector row sequence.
            let mut sel = vec![Vec::new(); ss.rows.len()];
            for slot in (0..ss.rows.len()).rev() {
                sel[slot] = choices[code % per_row].clone();
                code /= per_row;
            }
            (ss.clone(), SelectorSequence { rows: sel })
        })
    }))
}

/// Depth-first construction: each row is an ascending (k+1)-subset of the
/// still-unused indices, rows filled in order. The result is lexicographic in
/// the concatenated row vectors.
fn collect_supersamples(
    m: usize,
    k: usize,
    n: usize,
    used: &mut Vec<bool>,
    rows: &mut Vec<Vec<usize>>,
    out: &mut Vec<Supersample>,
) {
    if rows.len() == m {
        out.push(Supersample {
            rows: rows.clone(),
            k,
        });
        return;
    }
    let mut row = Vec::with_capacity(k + 1);
    build_row(1, k + 1, n, used, &mut row, rows, out, m, k);
}

#[allow(clippy::too_many_arguments)]
fn build_row(
    start: usize,
    remaining: usize,
    n: usize,
    used: &mut Vec<bool>,
    row: &mut Vec<usize>,
    rows: &mut Vec<Vec<usize>>,
    out: &mut Vec<Supersample>,
    m: usize,
    k: usize,
) {
    if remaining == 0 {
        rows.push(row.clone());
        collect_supersamples(m, k, n, used, rows, out);
        rows.pop();
        return;
    }
    for v in start..=n {
        if used[v] {
            continue;
        }
        used[v] = true;
        row.push(v);
        build_row(v + 1, remaining - 1, n, used, row, rows, out, m, k);
        row.pop();
        used[v] = false;
    }
}
