//! Enumeration-backed verification oracles.
//!
//! Everything here is brute force on purpose: exact expectations over all
//! permutations or all (supersample, selector) pairs at sizes where that is
//! feasible, used to pin the sampling layer and the moment inequality the
//! gap bounds rest on. Nothing in this module samples; given the same
//! inputs the answers are exact and reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;
use crate::sampling::{
    enumerate_permutations, enumerate_supersample_selector_pairs, induce_permutation,
};
use crate::bounds::c_mu;
use crate::{Error, Result};

/// Largest n for the moment-generating-function check; n! exp evaluations
/// per lambda stay cheap through 8!.
pub const MGF_MAX_N: usize = 8;

/// Default temperature grid for the MGF check.
pub const MGF_LAMBDA_GRID: [f64; 8] = [-10.0, -5.0, -1.0, -0.1, 0.1, 1.0, 5.0, 10.0];

/// One verification outcome: `measured` against `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Exact mean gap over all n! permutations for a fixed per-index loss table.
pub fn exact_expected_gap(loss_table: &[f64], m: usize) -> Result<f64> {
    let n = loss_table.len();
    let mut sum = 0.0;
    let mut count = 0usize;
    for perm in enumerate_permutations(n, m)? {
        sum += perm.gap(loss_table)?;
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Exact mean gap over all (supersample, selector) pairs at u = k m.
pub fn exact_expected_gap_via_pairs(loss_table: &[f64], m: usize, k: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (supersample, selectors) in enumerate_supersample_selector_pairs(m, k)? {
        let perm = induce_permutation(&supersample, &selectors)?;
        sum += perm.gap(loss_table)?;
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Largest elementwise difference between the sorted gap multisets produced
/// by direct permutation enumeration and by pair enumeration. Zero when the
/// factorization is a genuine bijection.
pub fn gap_multiset_deviation(loss_table: &[f64], m: usize, k: usize) -> Result<f64> {
    let mut direct: Vec<f64> = enumerate_permutations(loss_table.len(), m)?
        .map(|p| p.gap(loss_table))
        .collect::<Result<_>>()?;
    let mut via_pairs: Vec<f64> = enumerate_supersample_selector_pairs(m, k)?
        .map(|(s, u)| induce_permutation(&s, &u)?.gap(loss_table))
        .collect::<Result<_>>()?;
    if direct.len() != via_pairs.len() {
        return Err(Error::invalid(format!(
            "{} permutations vs {} pairs",
            direct.len(),
            via_pairs.len()
        )));
    }
    direct.sort_by(f64::total_cmp);
    via_pairs.sort_by(f64::total_cmp);
    Ok(direct
        .iter()
        .zip(&via_pairs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Exact check of the gap's moment generating function against its
/// sub-Gaussian envelope: for each lambda,
///
/// ```text
/// E_Z[ exp(lambda * gap(Z)) ]  <=  exp( lambda^2 B^2 (m+u) C(m,u) / (8 m u) )
/// ```
///
/// with the expectation enumerated over all n! permutations. Returns the
/// largest lhs - rhs over the grid; a correct implementation never exceeds
/// float slack above zero.
pub fn mgf_check(loss_table: &[f64], m: usize, b: f64, lambda_grid: &[f64]) -> Result<f64> {
    let n = loss_table.len();
    if n > MGF_MAX_N {
        return Err(Error::EnumerationTooLarge { n, max: MGF_MAX_N });
    }
    if m == 0 || m >= n {
        return Err(Error::SplitOutOfRange { m, n });
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("loss range must be positive, got {b}")));
    }
    for &l in loss_table {
        if !(0.0..=b).contains(&l) {
            return Err(Error::invalid(format!("loss {l} outside [0, {b}]")));
        }
    }
    if lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("lambda grid must be finite"));
    }

    let gaps: Vec<f64> = enumerate_permutations(n, m)?
        .map(|p| p.gap(loss_table))
        .collect::<Result<_>>()?;
    let u = n - m;
    let rate = b * b * n as f64 * c_mu(m, u) / (8.0 * m as f64 * u as f64);

    let mut worst = f64::NEG_INFINITY;
    for &lambda in lambda_grid {
        let lhs = gaps.iter().map(|&g| (lambda * g).exp()).sum::<f64>() / gaps.len() as f64;
        let rhs = (lambda * lambda * rate).exp();
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

fn random_loss_table(n: usize, b: f64, seed_coords: &[u64]) -> Vec<f64> {
    let mut rng = derive_rng(0, "oracle-tables", seed_coords);
    (0..n).map(|_| rng.gen_range(0.0..=b)).collect()
}

/// Splits (m, k) covered by the suite, smallest instances first.
const FACTORIZATION_CASES: [(usize, usize); 5] = [(1, 1), (2, 1), (1, 2), (2, 2), (1, 3)];

/// Runs every enumeration invariant up to instance size `max_n`:
/// factorization bijections, expected-gap agreement between the two
/// enumerations, gap multiset agreement, and the MGF envelope on random and
/// adversarial loss tables. `max_n` below 4 skips everything meaningful, so
/// it is rejected.
pub fn run_oracle_suite(max_n: usize) -> Result<OracleReport> {
    if max_n < 4 {
        return Err(Error::invalid(format!("max_n must be at least 4, got {max_n}")));
    }
    let max_n = max_n.min(MGF_MAX_N);
    let mut checks = Vec::new();

    for &(m, k) in &FACTORIZATION_CASES {
        let n = m * (k + 1);
        if n > max_n {
            continue;
        }
        let perm_count = enumerate_permutations(n, m)?.count();
        let mut seen = std::collections::HashSet::with_capacity(perm_count);
        let mut pair_count = 0usize;
        for (supersample, selectors) in enumerate_supersample_selector_pairs(m, k)? {
            let perm = induce_permutation(&supersample, &selectors)?;
            seen.insert(perm.train().iter().chain(perm.test()).copied().collect::<Vec<_>>());
            pair_count += 1;
        }
        let duplicates = pair_count - seen.len();
        let missing = perm_count.saturating_sub(seen.len());
        let measured = (duplicates + missing) as f64;
        checks.push(OracleCheck {
            name: format!("factorization-bijection m={m} k={k}"),
            passed: measured == 0.0 && pair_count == perm_count,
            measured,
            tolerance: 0.0,
        });

        let mut worst_mean = 0.0f64;
        let mut worst_multiset = 0.0f64;
        for table_idx in 0..5 {
            let table = random_loss_table(n, 1.0, &[m as u64, k as u64, table_idx]);
            let direct = exact_expected_gap(&table, m)?;
            let via_pairs = exact_expected_gap_via_pairs(&table, m, k)?;
            worst_mean = worst_mean.max((direct - via_pairs).abs());
            worst_multiset = worst_multiset.max(gap_multiset_deviation(&table, m, k)?);
        }
        checks.push(OracleCheck {
            name: format!("expected-gap-equality m={m} k={k}"),
            passed: worst_mean <= 1e-12,
            measured: worst_mean,
            tolerance: 1e-12,
        });
        checks.push(OracleCheck {
            name: format!("gap-multiset-equality m={m} k={k}"),
            passed: worst_multiset <= 1e-12,
            measured: worst_multiset,
            tolerance: 1e-12,
        });
    }

    for n in [4usize, 6, 8] {
        if n > max_n {
            continue;
        }
        let m = n / 2;
        let mut worst = f64::NEG_INFINITY;
        for table_idx in 0..5 {
            let table = random_loss_table(n, 1.0, &[n as u64, 77, table_idx]);
            worst = worst.max(mgf_check(&table, m, 1.0, &MGF_LAMBDA_GRID)?);
        }
        let alternating: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        worst = worst.max(mgf_check(&alternating, m, 1.0, &MGF_LAMBDA_GRID)?);
        checks.push(OracleCheck {
            name: format!("mgf-envelope n={n} m={m}"),
            passed: worst <= 1e-12,
            measured: worst,
            tolerance: 1e-12,
        });
    }

    Ok(OracleReport { checks })
}
