//! Discrete information measures, all in nats.
//!
//! Two containers: [`JointHistogram`] holds integer counts of paired symbol
//! observations and feeds the plug-in estimates; [`DiscreteJoint`] holds an
//! explicit joint law and feeds exact values for oracle tests. Symbols are
//! opaque `Ord` keys; callers discretize continuous quantities before
//! building histograms. Ordered maps fix the iteration order, so every
//! floating-point sum here is reproducible to the bit across processes.
//!
//! The plug-in estimator is the mutual information of the empirical joint,
//! with no bias correction. Floating-point sums that land epsilon-negative
//! are clamped to 0 (tolerance [`NEG_CLAMP`]).

use std::collections::BTreeMap;

use crate::{Error, Result};

/// How far below zero a provably non-negative sum may drift before clamping.
pub const NEG_CLAMP: f64 = 1e-12;

/// Integer counts of paired observations.
#[derive(Debug, Clone)]
pub struct JointHistogram<A: Ord, B: Ord> {
    counts: BTreeMap<(A, B), u64>,
    total: u64,
}

impl<A: Ord, B: Ord> Default for JointHistogram<A, B> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
            total: 0,
        }
    }
}

impl<A: Ord, B: Ord> JointHistogram<A, B> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, a: A, b: B) {
        self.observe_count(a, b, 1);
    }

    pub fn observe_count(&mut self, a: A, b: B, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry((a, b)).or_insert(0) += count;
        self.total += count;
    }

    pub fn from_pairs<I: IntoIterator<Item = (A, B)>>(pairs: I) -> Self {
        let mut h = Self::new();
        for (a, b) in pairs {
            h.observe(a, b);
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<(A, B), u64> {
        &self.counts
    }
}

/// An explicit joint probability mass function.
#[derive(Debug, Clone)]
pub struct DiscreteJoint<A: Ord, B: Ord> {
    probabilities: BTreeMap<(A, B), f64>,
}

impl<A: Ord, B: Ord> DiscreteJoint<A, B> {
    /// Validates non-negativity and normalization (sum within 1e-12 of 1).
    pub fn new<I: IntoIterator<Item = ((A, B), f64)>>(atoms: I) -> Result<Self> {
        let mut probabilities = BTreeMap::new();
        let mut total = 0.0;
        for (index, ((a, b), p)) in atoms.into_iter().enumerate() {
            if p < 0.0 {
                return Err(Error::NegativeProbability { index, value: p });
            }
            total += p;
            *probabilities.entry((a, b)).or_insert(0.0) += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedJoint { total });
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &BTreeMap<(A, B), f64> {
        &self.probabilities
    }

    fn marginals(&self) -> (BTreeMap<&A, f64>, BTreeMap<&B, f64>) {
        let mut pa: BTreeMap<&A, f64> = BTreeMap::new();
        let mut pb: BTreeMap<&B, f64> = BTreeMap::new();
        for ((a, b), &p) in &self.probabilities {
            *pa.entry(a).or_insert(0.0) += p;
            *pb.entry(b).or_insert(0.0) += p;
        }
        (pa, pb)
    }
}

/// Plug-in mutual information of the empirical joint, in nats.
pub fn plugin_mutual_information<A: Ord, B: Ord>(hist: &JointHistogram<A, B>) -> Result<f64> {
    if hist.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = hist.total as f64;
    let mut pa: BTreeMap<&A, f64> = BTreeMap::new();
    let mut pb: BTreeMap<&B, f64> = BTreeMap::new();
    for ((a, b), &c) in &hist.counts {
        *pa.entry(a).or_insert(0.0) += c as f64 / n;
        *pb.entry(b).or_insert(0.0) += c as f64 / n;
    }
    let mut mi = 0.0;
    for ((a, b), &c) in &hist.counts {
        if c == 0 {
            continue;
        }
        let p = c as f64 / n;
        mi += p * (p / (pa[a] * pb[b])).ln();
    }
    debug_assert!(mi > -NEG_CLAMP, "plug-in MI sum fell to {mi}");
    Ok(mi.max(0.0))
}

/// Plug-in entropies of the two marginals, in nats. The plug-in MI never
/// exceeds the smaller of the two.
pub fn plugin_marginal_entropies<A: Ord, B: Ord>(
    hist: &JointHistogram<A, B>,
) -> Result<(f64, f64)> {
    if hist.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = hist.total as f64;
    let mut pa: BTreeMap<&A, f64> = BTreeMap::new();
    let mut pb: BTreeMap<&B, f64> = BTreeMap::new();
    for ((a, b), &c) in &hist.counts {
        *pa.entry(a).or_insert(0.0) += c as f64 / n;
        *pb.entry(b).or_insert(0.0) += c as f64 / n;
    }
    fn entropy<K>(m: &BTreeMap<K, f64>) -> f64 {
        m.values()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum::<f64>()
            .max(0.0)
    }
    Ok((entropy(&pa), entropy(&pb)))
}

/// Exact mutual information of an explicit joint, in nats.
pub fn exact_mutual_information<A: Ord, B: Ord>(joint: &DiscreteJoint<A, B>) -> Result<f64> {
    let (pa, pb) = joint.marginals();
    let mut mi = 0.0;
    for ((a, b), &p) in &joint.probabilities {
        if p > 0.0 {
            mi += p * (p / (pa[a] * pb[b])).ln();
        }
    }
    debug_assert!(mi > -NEG_CLAMP, "exact MI sum fell to {mi}");
    Ok(mi.max(0.0))
}

/// Pointwise log-ratio log p(a,b) / (p(a) p(b)); negative values are fine.
pub fn information_density<A: Ord, B: Ord>(
    joint: &DiscreteJoint<A, B>,
    point: (&A, &B),
) -> Result<f64> {
    let p = joint
        .probabilities
        .iter()
        .find(|((a, b), _)| (a, b) == (point.0, point.1))
        .map(|(_, &p)| p)
        .unwrap_or(0.0);
    if p <= 0.0 {
        return Err(Error::ZeroProbabilityPoint);
    }
    let (pa, pb) = joint.marginals();
    Ok((p / (pa[point.0] * pb[point.1])).ln())
}

/// KL divergence between two finite distributions given as aligned slices.
///
/// Requires p absolutely continuous with respect to q. Inputs must each sum
/// to 1 within 1e-9.
pub fn kl_divergence_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            p_len: p.len(),
            q_len: q.len(),
        });
    }
    for (index, dist) in [p, q].into_iter().enumerate() {
        for (i, &v) in dist.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeProbability {
                    index: index * p.len() + i,
                    value: v,
                });
            }
        }
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedJoint { total });
        }
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::NotAbsolutelyContinuous { index: i, p_val: pi });
            }
            kl += pi * (pi / qi).ln();
        }
    }
    debug_assert!(kl > -NEG_CLAMP, "KL sum fell to {kl}");
    Ok(kl.max(0.0))
}

/// KL( N(w, var_post I_d) || N(0, var_prior I_d) ) in closed form:
/// (1/2) [ (d var_post + ||w||^2) / var_prior - d + d ln(var_prior / var_post) ].
pub fn kl_gaussian_isotropic(
    center_sq_norm: f64,
    dim: usize,
    var_post: f64,
    var_prior: f64,
) -> Result<f64> {
    if var_post <= 0.0 {
        return Err(Error::NonPositiveVariance {
            name: "var_post",
            value: var_post,
        });
    }
    if var_prior <= 0.0 {
        return Err(Error::NonPositiveVariance {
            name: "var_prior",
            value: var_prior,
        });
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(center_sq_norm >= 0.0) {
        return Err(Error::invalid(format!(
            "squared norm must be non-negative and finite, got {center_sq_norm}"
        )));
    }
    let d = dim as f64;
    let kl = 0.5 * ((d * var_post + center_sq_norm) / var_prior - d + d * (var_prior / var_post).ln());
    debug_assert!(kl > -NEG_CLAMP, "Gaussian KL fell to {kl}");
    Ok(kl.max(0.0))
}
