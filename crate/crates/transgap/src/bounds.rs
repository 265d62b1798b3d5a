//! Closed-form bound evaluators.
//!
//! Every function here is a total, deterministic map from scalar inputs to a
//! bound value. Estimation lives elsewhere; keeping the arithmetic pure makes
//! each formula independently testable. A value that exceeds the trivially
//! attainable range (the loss range `B` for gap bounds, `B^2` for squared-gap
//! bounds, 1 for error-rate bounds) is returned as-is with `vacuous` set,
//! never truncated.
//!
//! Shared notation, with `n = m + u`:
//!
//! ```text
//! C(m,u)   = 2 n max(m,u) / ((n - 1/2)(2 max(m,u) - 1))      split-size constant, -> 1
//! phi_a(p) = -(1/a) ln(1 - (1 - e^-a) p)                      Catoni transform, increasing in p
//! ```
//!
//! The expectation, squared, single-draw, and absolute bounds consume a
//! mutual-information value; the conditional-MI family consumes disintegrated
//! MI samples; the PAC-Bayes family consumes KL divergences and a temperature
//! `lambda` that must be fixed before the split is observed, so none of the
//! high-probability evaluators optimize `lambda` internally (the geometric
//! grid variant picks from a data-independent grid and accounts for it by
//! union bound).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar inputs shared by the bound evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    /// Training count.
    pub m: usize,
    /// Test count.
    pub u: usize,
    /// Test-to-train ratio when u = k * m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Loss range upper bound B.
    pub b: f64,
    /// Parameter dimension, where a bound needs one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Confidence level for high-probability bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// PAC-Bayes temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl BoundContext {
    pub fn new(m: usize, u: usize, b: f64) -> Result<Self> {
        if m < 1 || u < 1 {
            return Err(Error::invalid(format!("need m >= 1 and u >= 1, got m = {m}, u = {u}")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!("loss range must be positive and finite, got {b}")));
        }
        Ok(Self {
            m,
            u,
            k: None,
            b,
            d: None,
            delta: None,
            lambda: None,
        })
    }

    pub fn with_ratio(mut self, k: usize) -> Result<Self> {
        if k < 1 || self.u != k * self.m {
            return Err(Error::invalid(format!(
                "ratio k = {k} inconsistent with m = {}, u = {}",
                self.m, self.u
            )));
        }
        self.k = Some(k);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.m + self.u
    }

    /// C(m,u) for this context.
    pub fn c(&self) -> f64 {
        c_mu(self.m, self.u)
    }

    fn ratio(&self) -> Result<usize> {
        self.k.ok_or_else(|| {
            Error::precondition("this bound needs the test-to-train ratio k (u = k m)".to_string())
        })
    }
}

/// A bound value plus an honesty flag: `vacuous` means the value exceeds what
/// the loss range already guarantees (or, for Catoni inversions, that the
/// inverse had to clamp). Values are never truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    fn gap_bound(value: f64, ctx: &BoundContext) -> Self {
        BoundValue {
            value,
            vacuous: value > ctx.b,
        }
    }
}

/// Per-step statistics of the adaptive-update process for the trajectory
/// bound: `per_step_expected_sq_norm[t]` is E||Psi_t||^2 and `sigma_schedule`
/// is the matching per-step noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub per_step_expected_sq_norm: Vec<f64>,
    pub sigma_schedule: Vec<f64>,
    pub dim: usize,
}

impl TrajectoryStats {
    pub fn new(per_step_expected_sq_norm: Vec<f64>, sigma_schedule: Vec<f64>, dim: usize) -> Result<Self> {
        if per_step_expected_sq_norm.is_empty() {
            return Err(Error::invalid("trajectory needs at least one step"));
        }
        if per_step_expected_sq_norm.len() != sigma_schedule.len() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "{} squared norms vs {} sigma entries",
                    per_step_expected_sq_norm.len(),
                    sigma_schedule.len()
                ),
            });
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        for (&v, &s) in per_step_expected_sq_norm.iter().zip(&sigma_schedule) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("squared norms must be finite and non-negative, got {v}")));
            }
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::invalid(format!("sigma schedule must be positive, got {s}")));
            }
        }
        Ok(Self {
            per_step_expected_sq_norm,
            sigma_schedule,
            dim,
        })
    }

    /// Replaces the noise schedule with a constant value.
    pub fn with_constant_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        self.sigma_schedule = vec![sigma; self.per_step_expected_sq_norm.len()];
        Ok(self)
    }
}

/// Inputs for the curvature-based gap bound on logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianBoundInputs {
    /// Upper bound B_H on the Hessian spectral norm along the trajectory.
    pub spectral_cap: f64,
    pub dim: usize,
    /// I(W_T; Z) in nats.
    pub mi_estimate: f64,
    /// Sum of per-step noise variances.
    pub noise_budget: f64,
}

/// Split-size constant 2(m+u)max(m,u) / ((m+u-1/2)(2max(m,u)-1)).
#[must_use]
pub fn c_mu(m: usize, u: usize) -> f64 {
    let n = (m + u) as f64;
    let big = m.max(u) as f64;
    2.0 * n * big / ((n - 0.5) * (2.0 * big - 1.0))
}

/// Catoni transform -(1/a) ln(1 - (1 - e^-a) p).
pub fn phi(a: f64, p: f64) -> Result<f64> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::invalid(format!("a must be finite and nonzero, got {a}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let arg = 1.0 - (1.0 - (-a).exp()) * p;
    if arg <= 0.0 {
        return Err(Error::PhiOutOfDomain { a, p, arg });
    }
    Ok(-arg.ln() / a)
}

/// Exact inverse of `phi(a, .)` on [0, 1] for a > 0:
/// p = (1 - e^{-a y}) / (1 - e^{-a}). A `y` beyond phi(a, 1) = 1 clamps to
/// p = 1 with the flag set, since an error bound of 1 says nothing.
pub fn phi_inverse(a: f64, y: f64) -> Result<BoundValue> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("a must be positive and finite, got {a}")));
    }
    if !(y >= 0.0) {
        return Err(Error::invalid(format!("y must be non-negative, got {y}")));
    }
    let p = (1.0 - (-a * y).exp()) / (1.0 - (-a).exp());
    if p > 1.0 {
        return Ok(BoundValue {
            value: 1.0,
            vacuous: true,
        });
    }
    Ok(BoundValue {
        value: p.max(0.0),
        vacuous: false,
    })
}

/// Expected-gap bound sqrt( B^2 C(m,u) I (m+u) / (2 m u) ).
pub fn mi_bound_expectation(ctx: &BoundContext, mi: f64) -> Result<BoundValue> {
    require_mi(mi)?;
    let (m, u, n) = muf(ctx);
    let value = (ctx.b * ctx.b * ctx.c() * mi * n / (2.0 * m * u)).sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Squared-gap bound B^2 C(m,u) (I + ln 3) (m+u) / (m u). Vacuous above B^2.
pub fn mi_bound_squared(ctx: &BoundContext, mi: f64) -> Result<BoundValue> {
    require_mi(mi)?;
    let (m, u, n) = muf(ctx);
    let value = ctx.b * ctx.b * ctx.c() * (mi + 3f64.ln()) * n / (m * u);
    Ok(BoundValue {
        value,
        vacuous: value > ctx.b * ctx.b,
    })
}

/// Single-draw high-probability bound
/// sqrt( 2 B^2 C(m,u) (m+u)/(m u) (ln(2/delta) + I/delta) ).
pub fn mi_bound_single_draw(ctx: &BoundContext, mi: f64, delta: f64) -> Result<BoundValue> {
    require_mi(mi)?;
    require_delta(delta)?;
    let (m, u, n) = muf(ctx);
    let value =
        (2.0 * ctx.b * ctx.b * ctx.c() * n / (m * u) * ((2.0 / delta).ln() + mi / delta)).sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Absolute-gap expectation bound sqrt( B^2 C(m,u) (m+u) (I + ln 2) / (2 m u) ).
pub fn mi_bound_absolute(ctx: &BoundContext, mi: f64) -> Result<BoundValue> {
    require_mi(mi)?;
    let (m, u, n) = muf(ctx);
    let value = (ctx.b * ctx.b * ctx.c() * n * (mi + 2f64.ln()) / (2.0 * m * u)).sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Pointwise bound from the information density at the realized (W, Z):
/// sqrt( B^2 C(m,u) (m+u) / (2(mu - m - u)) (ln((1/delta) sqrt(mu/(m+u))) + density) ).
/// The density may be negative; a negative radicand yields 0 with the flag set.
pub fn info_density_bound(ctx: &BoundContext, density: f64, delta: f64) -> Result<BoundValue> {
    require_delta(delta)?;
    require_split_margin(ctx)?;
    if !density.is_finite() {
        return Err(Error::invalid(format!("information density must be finite, got {density}")));
    }
    let (m, u, n) = muf(ctx);
    let radicand = ctx.b * ctx.b * ctx.c() * n / (2.0 * (m * u - m - u))
        * (((1.0 / delta) * (m * u / n).sqrt()).ln() + density);
    if radicand < 0.0 {
        return Ok(BoundValue {
            value: 0.0,
            vacuous: true,
        });
    }
    Ok(BoundValue::gap_bound(radicand.sqrt(), ctx))
}

/// Expected-gap bound from disintegrated conditional MI samples: the mean of
/// sqrt( 2 (k+1) B^2 I / n ) over per-supersample MI values.
pub fn cmi_bound(ctx: &BoundContext, disintegrated_mi_samples: &[f64]) -> Result<BoundValue> {
    let k = ctx.ratio()?;
    if disintegrated_mi_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    for &s in disintegrated_mi_samples {
        require_mi(s)?;
    }
    let n = ctx.n() as f64;
    let scale = 2.0 * (k + 1) as f64 * ctx.b * ctx.b / n;
    let value = disintegrated_mi_samples
        .iter()
        .map(|&s| (scale * s).sqrt())
        .sum::<f64>()
        / disintegrated_mi_samples.len() as f64;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Squared-gap conditional-MI bound 4 (k+1) B^2 (I + ln 3) / n. Vacuous above B^2.
pub fn cmi_bound_squared(ctx: &BoundContext, conditional_mi: f64) -> Result<BoundValue> {
    let k = ctx.ratio()?;
    require_mi(conditional_mi)?;
    let value = 4.0 * (k + 1) as f64 * ctx.b * ctx.b * (conditional_mi + 3f64.ln()) / ctx.n() as f64;
    Ok(BoundValue {
        value,
        vacuous: value > ctx.b * ctx.b,
    })
}

/// Which per-index symbol family a pointwise conditional-MI estimate used.
/// Metadata only: the arithmetic is identical, the MI inputs differ upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmiVariant {
    /// Predicted-label tuples.
    F,
    /// Loss tuples.
    E,
    /// Loss differences (pairs only).
    Id,
}

/// Per-index conditional-MI bound (B/m) sum_i mean_over_supersamples sqrt(2 I_i).
pub fn pointwise_cmi_bound(
    ctx: &BoundContext,
    per_index_mi: &[Vec<f64>],
    _variant: CmiVariant,
) -> Result<BoundValue> {
    if per_index_mi.len() != ctx.m {
        return Err(Error::PerIndexRowMismatch {
            expected: ctx.m,
            got: per_index_mi.len(),
        });
    }
    let mut total = 0.0;
    for row in per_index_mi {
        if row.is_empty() {
            return Err(Error::EmptySamples);
        }
        for &s in row {
            require_mi(s)?;
        }
        total += row.iter().map(|&s| (2.0 * s).sqrt()).sum::<f64>() / row.len() as f64;
    }
    let value = ctx.b * total / ctx.m as f64;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Explicit total-error bound from the Catoni-style conditional-MI form:
/// phi_inverse(lambda/m, train_error + (kl + ln(1/delta)) / lambda).
/// Zero-one loss context, so the context must have B = 1.
pub fn catoni_cmi_error_bound(
    ctx: &BoundContext,
    kl: f64,
    lambda: f64,
    delta: f64,
    train_error: f64,
) -> Result<BoundValue> {
    catoni_error_bound(ctx, kl, lambda, delta, train_error)
}

/// Identical arithmetic under the random-sampling label, bounding the total
/// error over the full data.
pub fn catoni_random_sampling_bound(
    ctx: &BoundContext,
    kl: f64,
    lambda: f64,
    delta: f64,
    train_error: f64,
) -> Result<BoundValue> {
    catoni_error_bound(ctx, kl, lambda, delta, train_error)
}

fn catoni_error_bound(
    ctx: &BoundContext,
    kl: f64,
    lambda: f64,
    delta: f64,
    train_error: f64,
) -> Result<BoundValue> {
    require_mi(kl)?;
    require_lambda(lambda)?;
    require_delta(delta)?;
    if ctx.b != 1.0 {
        return Err(Error::precondition(format!(
            "Catoni error bounds assume zero-one losses (B = 1), context has B = {}",
            ctx.b
        )));
    }
    if !(0.0..=1.0).contains(&train_error) {
        return Err(Error::invalid(format!("train error must lie in [0, 1], got {train_error}")));
    }
    phi_inverse(
        lambda / ctx.m as f64,
        train_error + (kl + (1.0 / delta).ln()) / lambda,
    )
}

/// In-expectation PAC-Bayes bound lambda B^2 C(m,u) (m+u)/(8 m u) + E[KL]/lambda.
pub fn pac_bayes_expectation_bound(
    ctx: &BoundContext,
    expected_kl: f64,
    lambda: f64,
) -> Result<BoundValue> {
    require_mi(expected_kl)?;
    require_lambda(lambda)?;
    let value = lambda * pac_rate(ctx) + expected_kl / lambda;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// High-probability PAC-Bayes bound
/// lambda B^2 C(m,u) (m+u)/(8 m u) + (KL + ln(1/delta))/lambda.
pub fn pac_bayes_hp_bound(ctx: &BoundContext, kl: f64, lambda: f64, delta: f64) -> Result<BoundValue> {
    require_mi(kl)?;
    require_lambda(lambda)?;
    require_delta(delta)?;
    let value = lambda * pac_rate(ctx) + (kl + (1.0 / delta).ln()) / lambda;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Single-draw PAC-Bayes bound with the posterior-to-prior log density ratio
/// in place of the KL term. The ratio may be negative.
pub fn pac_bayes_single_draw_bound(
    ctx: &BoundContext,
    log_density_ratio: f64,
    lambda: f64,
    delta: f64,
) -> Result<BoundValue> {
    require_lambda(lambda)?;
    require_delta(delta)?;
    if !log_density_ratio.is_finite() {
        return Err(Error::invalid(format!("log density ratio must be finite, got {log_density_ratio}")));
    }
    let value = lambda * pac_rate(ctx) + (log_density_ratio + (1.0 / delta).ln()) / lambda;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Data-independent geometric grid {e^i} ∩ [1, mu/(m+u)], then the best
/// high-probability bound over it with the union-bound correction
/// ln(|grid| / delta). Returns the bound and the chosen lambda. The grid
/// endpoints assume unit-range losses; B stays explicit in the rate term.
pub fn pac_bayes_grid_bound(ctx: &BoundContext, kl: f64, delta: f64) -> Result<(BoundValue, f64)> {
    require_mi(kl)?;
    require_delta(delta)?;
    let (m, u, n) = muf(ctx);
    let cap = m * u / n;
    if cap < 1.0 {
        return Err(Error::precondition(format!(
            "geometric grid is empty: mu/(m+u) = {cap} < 1"
        )));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let lam = (i as f64).exp();
        if lam > cap {
            break;
        }
        grid.push(lam);
        i += 1;
    }
    let penalty = (grid.len() as f64 / delta).ln();
    let mut best = f64::INFINITY;
    let mut best_lambda = grid[0];
    for &lam in &grid {
        let v = lam * pac_rate(ctx) + (kl + penalty) / lam;
        if v < best {
            best = v;
            best_lambda = lam;
        }
    }
    Ok((BoundValue::gap_bound(best, ctx), best_lambda))
}

/// Comparator bound sqrt( (m+u)/(2mu) (KL + ln((3 ln m / delta) sqrt(mu/(m+u)))) ),
/// stated for unit-range losses and m, u >= 20.
pub fn begin_comparator_bound(ctx: &BoundContext, kl: f64, delta: f64) -> Result<BoundValue> {
    require_mi(kl)?;
    require_delta(delta)?;
    if ctx.m < 20 || ctx.u < 20 {
        return Err(Error::precondition(format!(
            "comparator bound assumes m, u >= 20, got m = {}, u = {}",
            ctx.m, ctx.u
        )));
    }
    let (m, u, n) = muf(ctx);
    let value = (n / (2.0 * m * u) * (kl + ((3.0 * m.ln() / delta) * (m * u / n).sqrt()).ln())).sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Perturbation scale for the flatness bound: either a probe radius directly
/// or a posterior deviation sigma, expanded as rho = sigma (1 + C~) sqrt(d).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatnessScale {
    Rho(f64),
    Sigma(f64),
}

/// Flatness bound on the test error of a perturbation-robust predictor:
///
/// ```text
/// sharp_train_max + (lambda C(m,u) + 8)(m+u)/(8mu)
///   + (1/lambda) ( (1/2)[1 + d ln(1 + (1+C~)^2 ||w||^2 / rho^2)]
///                  + ln(1/(6 delta)) + 2 ln(6 pi mu/(m+u)) )
/// ```
///
/// with C~ = sqrt(2 ln(mu/(m+u)) / d). Returns the bound and the rho used.
/// `lambda` is taken as given: its optimum depends on ||w||, which is only
/// known after observing the split, so optimizing here would be circular.
pub fn flatness_bound(
    ctx: &BoundContext,
    sharp_train_max: f64,
    w_sq_norm: f64,
    dim: usize,
    scale: FlatnessScale,
    lambda: f64,
    delta: f64,
) -> Result<(BoundValue, f64)> {
    require_lambda(lambda)?;
    require_delta(delta)?;
    require_split_margin(ctx)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(0.0..=1.0).contains(&sharp_train_max) {
        return Err(Error::invalid(format!(
            "perturbed train error must lie in [0, 1], got {sharp_train_max}"
        )));
    }
    if !(w_sq_norm >= 0.0) || !w_sq_norm.is_finite() {
        return Err(Error::invalid(format!("squared norm must be non-negative, got {w_sq_norm}")));
    }
    let (m, u, n) = muf(ctx);
    let d = dim as f64;
    let c_tilde = (2.0 * (m * u / n).ln() / d).sqrt();
    let rho = match scale {
        FlatnessScale::Rho(r) => {
            if !(r > 0.0) {
                return Err(Error::invalid(format!("rho must be positive, got {r}")));
            }
            r
        }
        FlatnessScale::Sigma(s) => {
            if !(s > 0.0) {
                return Err(Error::invalid(format!("sigma must be positive, got {s}")));
            }
            s * (1.0 + c_tilde) * d.sqrt()
        }
    };
    let log_term = 0.5 * (1.0 + d * (1.0 + (1.0 + c_tilde) * (1.0 + c_tilde) * w_sq_norm / (rho * rho)).ln());
    let value = sharp_train_max
        + (lambda * ctx.c() + 8.0) * n / (8.0 * m * u)
        + (log_term + (1.0 / (6.0 * delta)).ln() + 2.0 * (6.0 * std::f64::consts::PI * m * u / n).ln())
            / lambda;
    Ok((
        BoundValue {
            value,
            vacuous: value > 1.0,
        },
        rho,
    ))
}

/// Comparator bound (lambda/m^2) E[sum of squared losses] + (KL + ln(1/delta))/lambda,
/// stated for the balanced split m = u.
pub fn audibert_comparator_bound(
    ctx: &BoundContext,
    kl: f64,
    lambda: f64,
    delta: f64,
    expected_sq_loss_sum: f64,
) -> Result<BoundValue> {
    require_mi(kl)?;
    require_lambda(lambda)?;
    require_delta(delta)?;
    if ctx.m != ctx.u {
        return Err(Error::precondition(format!(
            "comparator bound assumes m = u, got m = {}, u = {}",
            ctx.m, ctx.u
        )));
    }
    if !(expected_sq_loss_sum >= 0.0) || !expected_sq_loss_sum.is_finite() {
        return Err(Error::invalid(format!(
            "expected squared-loss sum must be non-negative, got {expected_sq_loss_sum}"
        )));
    }
    let m = ctx.m as f64;
    let value = lambda / (m * m) * expected_sq_loss_sum + (kl + (1.0 / delta).ln()) / lambda;
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Random-sampling PAC-Bayes bound for exchangeable priors; same arithmetic
/// as the high-probability split bound.
pub fn exchangeable_pac_bayes_bound(
    ctx: &BoundContext,
    kl: f64,
    lambda: f64,
    delta: f64,
) -> Result<BoundValue> {
    pac_bayes_hp_bound(ctx, kl, lambda, delta)
}

/// Leading term of the curvature gap bound:
/// noise_budget * sqrt( 32 d^2 B_H^2 C(m,u) (I + ln d) (m+u)/(m u) ).
/// The O((sum sigma^2)^2) remainder is omitted.
pub fn hessian_trace_gap_bound(inputs: &HessianBoundInputs, ctx: &BoundContext) -> Result<BoundValue> {
    if !(inputs.spectral_cap > 0.0) || !inputs.spectral_cap.is_finite() {
        return Err(Error::invalid(format!(
            "spectral cap must be positive, got {}",
            inputs.spectral_cap
        )));
    }
    if inputs.dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    require_mi(inputs.mi_estimate)?;
    if !(inputs.noise_budget >= 0.0) || !inputs.noise_budget.is_finite() {
        return Err(Error::invalid(format!(
            "noise budget must be non-negative, got {}",
            inputs.noise_budget
        )));
    }
    let (m, u, n) = muf(ctx);
    let d = inputs.dim as f64;
    let value = inputs.noise_budget
        * (32.0
            * d
            * d
            * inputs.spectral_cap
            * inputs.spectral_cap
            * ctx.c()
            * (inputs.mi_estimate + d.ln())
            * n
            / (m * u))
            .sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

/// Trajectory bound for adaptive optimizers:
/// (1/2) sqrt( d C(m,u) (m+u)/(m u) sum_t ln( E||Psi_t||^2 / (d sigma_t^2) + 1 ) ).
pub fn adagrad_trajectory_bound(ctx: &BoundContext, stats: &TrajectoryStats) -> Result<BoundValue> {
    let d = stats.dim as f64;
    let (m, u, n) = muf(ctx);
    let mut log_sum = 0.0;
    for (&sq, &sigma) in stats
        .per_step_expected_sq_norm
        .iter()
        .zip(&stats.sigma_schedule)
    {
        log_sum += (sq / (d * sigma * sigma) + 1.0).ln();
    }
    let value = 0.5 * (d * ctx.c() * n / (m * u) * log_sum).sqrt();
    Ok(BoundValue::gap_bound(value, ctx))
}

fn muf(ctx: &BoundContext) -> (f64, f64, f64) {
    (ctx.m as f64, ctx.u as f64, ctx.n() as f64)
}

fn pac_rate(ctx: &BoundContext) -> f64 {
    let (m, u, n) = muf(ctx);
    ctx.b * ctx.b * ctx.c() * n / (8.0 * m * u)
}

fn require_mi(mi: f64) -> Result<()> {
    if !(mi >= 0.0) || !mi.is_finite() {
        return Err(Error::invalid(format!(
            "information/KL values are non-negative and finite, got {mi}"
        )));
    }
    Ok(())
}

fn require_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn require_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// The density and flatness bounds divide by mu - m - u, so they need a
/// split with mu > m + u: (m >= 2 and u >= 3) or (m >= 3 and u >= 2).
fn require_split_margin(ctx: &BoundContext) -> Result<()> {
    let ok = (ctx.m >= 2 && ctx.u >= 3) || (ctx.m >= 3 && ctx.u >= 2);
    if !ok || ctx.m * ctx.u <= ctx.m + ctx.u {
        return Err(Error::precondition(format!(
            "needs (m >= 2, u >= 3) or (m >= 3, u >= 2), got m = {}, u = {}",
            ctx.m, ctx.u
        )));
    }
    Ok(())
}
