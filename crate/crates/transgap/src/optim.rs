//! Deterministic mini-batch training with SGD, AdaGrad, and Adam.
//!
//! Randomness enters exactly twice, both through the config seed: the
//! parameter initialization and one shuffle of the training index list.
//! Batches then cycle through consecutive chunks of that fixed list, so a
//! repeated run is bit-identical. The training loss is cross-entropy.
//!
//! Each step records the squared norm of the applied update Psi_t, which is
//! what the trajectory bound consumes:
//!
//! ```text
//! sgd:      Psi_t = lr * g_t
//! adagrad:  V_t = V_{t-1} + g_t (.) g_t;  Psi_t = lr * g_t / (sqrt(V_t) + eps)
//! adam:     M_t = b1 M_{t-1} + (1-b1) g_t;  V_t = b2 V_{t-1} + (1-b2) g_t^2
//!           Psi_t = lr * (M_t / (1-b1^t)) / (sqrt(V_t / (1-b2^t)) + eps)
//! w_t = w_{t-1} - Psi_t
//! ```

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bounds::TrajectoryStats;
use crate::data::Dataset;
use crate::models::{loss_and_grad, LossKind, ModelSpec, ParameterVector};
use crate::rng::derive_rng;
use crate::{Error, Result};

/// Default per-step noise scale attached to recorded trajectories; callers
/// with a real schedule overwrite it.
pub const DEFAULT_SIGMA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adagrad { lr: f64, epsilon: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    fn validate(&self) -> Result<()> {
        let check_lr = |lr: f64| {
            if !(lr > 0.0) || !lr.is_finite() {
                Err(Error::invalid(format!("learning rate must be positive, got {lr}")))
            } else {
                Ok(())
            }
        };
        let check_eps = |eps: f64| {
            if !(eps > 0.0) || !eps.is_finite() {
                Err(Error::invalid(format!("epsilon must be positive, got {eps}")))
            } else {
                Ok(())
            }
        };
        match *self {
            OptimizerKind::Sgd { lr } => check_lr(lr),
            OptimizerKind::Adagrad { lr, epsilon } => {
                check_lr(lr)?;
                check_eps(epsilon)
            }
            OptimizerKind::Adam { lr, beta1, beta2, epsilon } => {
                check_lr(lr)?;
                check_eps(epsilon)?;
                for beta in [beta1, beta2] {
                    if !(0.0..1.0).contains(&beta) {
                        return Err(Error::invalid(format!("betas must lie in [0, 1), got {beta}")));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(flatten)]
    pub kind: OptimizerKind,
    /// None trains on the full index set each step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub iterations: usize,
    /// Callers running many trials replace this per trial.
    #[serde(default)]
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.iterations == 0 {
            return Err(Error::invalid("need at least one iteration"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// Optimizer state separated from the loop so each update rule is testable
/// on raw gradients.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    step_count: usize,
    accumulator: Vec<f64>,
    momentum: Vec<f64>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, dim: usize) -> Self {
        let state_dim = match kind {
            OptimizerKind::Sgd { .. } => 0,
            _ => dim,
        };
        let momentum_dim = match kind {
            OptimizerKind::Adam { .. } => dim,
            _ => 0,
        };
        Self {
            kind,
            step_count: 0,
            accumulator: vec![0.0; state_dim],
            momentum: vec![0.0; momentum_dim],
        }
    }

    /// Consumes one gradient and returns the update Psi to subtract.
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        self.step_count += 1;
        match self.kind {
            OptimizerKind::Sgd { lr } => grad.iter().map(|&g| lr * g).collect(),
            OptimizerKind::Adagrad { lr, epsilon } => {
                let mut psi = Vec::with_capacity(grad.len());
                for (v, &g) in self.accumulator.iter_mut().zip(grad) {
                    *v += g * g;
                    psi.push(lr * g / (v.sqrt() + epsilon));
                }
                psi
            }
            OptimizerKind::Adam { lr, beta1, beta2, epsilon } => {
                let t = self.step_count as i32;
                let m_correction = 1.0 - beta1.powi(t);
                let v_correction = 1.0 - beta2.powi(t);
                let mut psi = Vec::with_capacity(grad.len());
                for ((m, v), &g) in self.momentum.iter_mut().zip(&mut self.accumulator).zip(grad) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / m_correction;
                    let v_hat = *v / v_correction;
                    psi.push(lr * m_hat / (v_hat.sqrt() + epsilon));
                }
                psi
            }
        }
    }

    #[cfg(test)]
    fn accumulator(&self) -> &[f64] {
        &self.accumulator
    }
}

/// One seeded shuffle of the index list, then consecutive chunks of at most
/// `batch_size`; step t trains on chunk t mod chunk_count.
pub(crate) fn batch_schedule(indices: &[usize], batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut shuffled = indices.to_vec();
    let mut rng = derive_rng(seed, "train-batches", &[]);
    shuffled.shuffle(&mut rng);
    shuffled.chunks(batch_size).map(|c| c.to_vec()).collect()
}

/// Seeded initialization, then `train_from`.
pub fn train(
    spec: &ModelSpec,
    data: &Dataset,
    train_indices: &[usize],
    opt: &OptimizerConfig,
) -> Result<(ParameterVector, TrajectoryStats, Vec<f64>)> {
    opt.validate()?;
    let mut rng = derive_rng(opt.seed, "train-init", &[]);
    let initial = spec.init_params(&mut rng);
    train_from(spec, data, train_indices, opt, initial)
}

/// Runs the deterministic training loop from an explicit starting point.
/// Returns the final parameters, the per-step ||Psi_t||^2 trajectory (with
/// the default sigma schedule attached), and the per-step pre-update batch
/// losses.
pub fn train_from(
    spec: &ModelSpec,
    data: &Dataset,
    train_indices: &[usize],
    opt: &OptimizerConfig,
    initial: ParameterVector,
) -> Result<(ParameterVector, TrajectoryStats, Vec<f64>)> {
    opt.validate()?;
    if train_indices.is_empty() {
        return Err(Error::invalid("index set must be non-empty"));
    }
    let batch_size = opt.batch_size.unwrap_or(train_indices.len()).min(train_indices.len());
    let schedule = batch_schedule(train_indices, batch_size, opt.seed);

    let dim = spec.param_count();
    let mut params = initial;
    let mut optimizer = Optimizer::new(opt.kind.clone(), dim);
    let mut psi_sq = Vec::with_capacity(opt.iterations);
    let mut loss_log = Vec::with_capacity(opt.iterations);

    for t in 1..=opt.iterations {
        let batch = &schedule[(t - 1) % schedule.len()];
        let (loss, grad) = loss_and_grad(spec, &params, data, batch, &LossKind::CrossEntropy)?;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { step: t, loss });
        }
        loss_log.push(loss);
        let psi = optimizer.step(grad.values());
        let sq: f64 = psi.iter().map(|p| p * p).sum();
        if !sq.is_finite() {
            return Err(Error::TrainingDiverged { step: t, loss });
        }
        psi_sq.push(sq);
        for (w, &u) in params.values_mut().iter_mut().zip(&psi) {
            *w -= u;
        }
        if params.values().iter().any(|w| !w.is_finite()) {
            return Err(Error::TrainingDiverged { step: t, loss });
        }
    }

    let stats = TrajectoryStats::new(psi_sq, vec![DEFAULT_SIGMA; opt.iterations], dim)?;
    Ok((params, stats, loss_log))
}
