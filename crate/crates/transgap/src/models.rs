//! Trainable models: multinomial logistic regression, ReLU MLP, and a
//! two-layer graph convolution network, all bias-free over dense matrices.
//!
//! Every architecture is a stack of linear layers with an optional
//! propagation matrix applied before each one: the identity for tabular
//! models, the normalized adjacency for the GCN, whose logits are
//! `A~ ReLU(A~ X W1) W2`. The whole-graph forward pass is intentional: the
//! unlabeled nodes' features participate in the propagation even when only
//! training rows contribute to the loss.
//!
//! Gradients are hand-coded backpropagation, not autodiff, and are pinned by
//! central finite differences in the tests. ReLU's subgradient at 0 is taken
//! as 0. Argmax prediction breaks ties toward the smallest class index so
//! zero-one losses are deterministic.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rng::derive_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ModelKind {
    LogisticRegression,
    Mlp { hidden: Vec<usize> },
    Gcn2 { hidden: usize },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic-regression",
            ModelKind::Mlp { .. } => "mlp",
            ModelKind::Gcn2 { .. } => "gcn2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub class_count: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, input_dim: usize, class_count: usize) -> Result<Self> {
        if input_dim == 0 || class_count < 2 {
            return Err(Error::invalid(format!(
                "need input_dim >= 1 and class_count >= 2, got {input_dim} and {class_count}"
            )));
        }
        if let ModelKind::Mlp { hidden } = &kind {
            if hidden.iter().any(|&h| h == 0) {
                return Err(Error::invalid("mlp hidden sizes must be positive"));
            }
        }
        if let ModelKind::Gcn2 { hidden } = &kind {
            if *hidden == 0 {
                return Err(Error::invalid("gcn2 hidden size must be positive"));
            }
        }
        Ok(Self {
            kind,
            input_dim,
            class_count,
        })
    }

    /// Width chain [input, hidden..., classes]; consecutive entries give each
    /// weight matrix's shape.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        match &self.kind {
            ModelKind::LogisticRegression => {}
            ModelKind::Mlp { hidden } => dims.extend_from_slice(hidden),
            ModelKind::Gcn2 { hidden } => dims.push(*hidden),
        }
        dims.push(self.class_count);
        dims
    }

    pub fn layout(&self) -> Vec<(usize, usize)> {
        self.dims().windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(|&(r, c)| r * c).sum()
    }

    /// Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per weight matrix.
    pub fn init_params(&self, rng: &mut impl Rng) -> ParameterVector {
        let layout = self.layout();
        let mut values = Vec::with_capacity(self.param_count());
        for &(rows, cols) in &layout {
            let scale = 1.0 / (rows as f64).sqrt();
            for _ in 0..rows * cols {
                values.push(rng.gen_range(-scale..scale));
            }
        }
        ParameterVector { values, layout }
    }

    pub fn needs_graph(&self) -> bool {
        matches!(self.kind, ModelKind::Gcn2 { .. })
    }
}

/// Flat parameter storage plus the (rows, cols) shape of each weight matrix,
/// stored row-major in sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
    layout: Vec<(usize, usize)>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, layout: Vec<(usize, usize)>) -> Result<Self> {
        let expected: usize = layout.iter().map(|&(r, c)| r * c).sum();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: format!("{} parameter values for a layout of {expected}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(spec: &ModelSpec) -> Self {
        Self {
            values: vec![0.0; spec.param_count()],
            layout: spec.layout(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[(usize, usize)] {
        &self.layout
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    fn matrix(&self, idx: usize) -> &[f64] {
        let mut offset = 0;
        for &(r, c) in &self.layout[..idx] {
            offset += r * c;
        }
        let (r, c) = self.layout[idx];
        &self.values[offset..offset + r * c]
    }

    fn matches(&self, spec: &ModelSpec) -> Result<()> {
        if self.layout != spec.layout() {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "parameter layout {:?} does not fit a {} spec expecting {:?}",
                    self.layout,
                    self.kind_hint(),
                    spec.layout()
                ),
            });
        }
        Ok(())
    }

    fn kind_hint(&self) -> String {
        format!("{}-matrix model", self.layout.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    ZeroOne,
    CrossEntropy,
}

/// Feature transform paired with each example by the consistency loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Augmentation {
    Identity,
    GaussianNoise { sigma: f64, seed: u64 },
}

impl Augmentation {
    fn apply(&self, features: &[f64]) -> Vec<f64> {
        match self {
            Augmentation::Identity => features.to_vec(),
            Augmentation::GaussianNoise { sigma, seed } => {
                let mut rng = derive_rng(*seed, "augment", &[]);
                features
                    .iter()
                    .map(|&x| {
                        let noise: f64 = rng.sample(StandardNormal);
                        x + sigma * noise
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LossKind {
    CrossEntropy,
    /// Squared distance between softmax outputs on original and augmented
    /// features, summed over classes, averaged over the index set.
    MseConsistency { augmentation: Augmentation },
}

/// Softmax class scores for the requested rows. Rows sum to 1 within 1e-9.
pub fn forward(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let pass = full_forward(spec, params, data, None)?;
    let n = data.n();
    let c = spec.class_count;
    let probs = softmax_rows(&pass.logits, n, c);
    indices
        .iter()
        .map(|&i| {
            if i >= n {
                return Err(Error::invalid(format!("index {i} out of range for n = {n}")));
            }
            Ok(probs[i * c..(i + 1) * c].to_vec())
        })
        .collect()
}

/// Mean loss over the index set and its gradient.
pub fn loss_and_grad(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    train_indices: &[usize],
    loss: &LossKind,
) -> Result<(f64, ParameterVector)> {
    check_indices(train_indices, data.n())?;
    let n = data.n();
    let c = spec.class_count;
    let count = train_indices.len() as f64;

    let prop = prop_of(spec, data)?;
    match loss {
        LossKind::CrossEntropy => {
            let pass = full_forward(spec, params, data, None)?;
            let log_probs = log_softmax_rows(&pass.logits, n, c);
            let probs = softmax_rows(&pass.logits, n, c);
            let labels = data.base().labels();
            let mut loss_sum = 0.0;
            let mut g_logits = vec![0.0; n * c];
            for &i in train_indices {
                let y = labels[i];
                loss_sum -= log_probs[i * c + y];
                for class in 0..c {
                    let indicator = if class == y { 1.0 } else { 0.0 };
                    g_logits[i * c + class] = (probs[i * c + class] - indicator) / count;
                }
            }
            let grads = backward(spec, params, &pass, &g_logits, prop)?;
            Ok((loss_sum / count, grads))
        }
        LossKind::MseConsistency { augmentation } => {
            let augmented = augmentation.apply(data.base().features());
            let pass = full_forward(spec, params, data, None)?;
            let pass_aug = full_forward(spec, params, data, Some(&augmented))?;
            let p = softmax_rows(&pass.logits, n, c);
            let q = softmax_rows(&pass_aug.logits, n, c);
            let mut loss_sum = 0.0;
            let mut g_p = vec![0.0; n * c];
            let mut g_q = vec![0.0; n * c];
            for &i in train_indices {
                for class in 0..c {
                    let diff = p[i * c + class] - q[i * c + class];
                    loss_sum += diff * diff;
                    g_p[i * c + class] = 2.0 * diff / count;
                    g_q[i * c + class] = -2.0 * diff / count;
                }
            }
            let gz_p = softmax_backward(&p, &g_p, n, c);
            let gz_q = softmax_backward(&q, &g_q, n, c);
            let mut grads = backward(spec, params, &pass, &gz_p, prop)?;
            let grads_aug = backward(spec, params, &pass_aug, &gz_q, prop)?;
            for (g, ga) in grads.values_mut().iter_mut().zip(grads_aug.values()) {
                *g += ga;
            }
            Ok((loss_sum / count, grads))
        }
    }
}

/// Per-example losses under the chosen criterion.
pub fn evaluate(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    indices: &[usize],
    criterion: Criterion,
) -> Result<Vec<f64>> {
    check_indices(indices, data.n())?;
    let pass = full_forward(spec, params, data, None)?;
    let n = data.n();
    let c = spec.class_count;
    let labels = data.base().labels();
    match criterion {
        Criterion::ZeroOne => Ok(indices
            .iter()
            .map(|&i| {
                let predicted = argmax(&pass.logits[i * c..(i + 1) * c]);
                if predicted == labels[i] {
                    0.0
                } else {
                    1.0
                }
            })
            .collect()),
        Criterion::CrossEntropy => {
            let log_probs = log_softmax_rows(&pass.logits, n, c);
            Ok(indices.iter().map(|&i| -log_probs[i * c + labels[i]]).collect())
        }
    }
}

/// Predicted class per requested row (argmax, smallest index on ties).
pub fn predict(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<Vec<usize>> {
    check_indices(indices, data.n())?;
    let pass = full_forward(spec, params, data, None)?;
    let c = spec.class_count;
    Ok(indices
        .iter()
        .map(|&i| argmax(&pass.logits[i * c..(i + 1) * c]))
        .collect())
}

/// Largest zero-one train error found over the unperturbed point, `trials`
/// uniform random directions at radius rho, and the normalized gradient
/// ascent direction of the cross-entropy surrogate. A lower bound on the
/// true maximum over the rho-ball.
pub fn sharpness_probe(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    train_indices: &[usize],
    rho: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    check_indices(train_indices, data.n())?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be non-negative, got {rho}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one probe trial"));
    }
    params.matches(spec)?;

    let layout = params.layout().to_vec();
    let objective = |values: &[f64]| -> f64 {
        let perturbed = ParameterVector {
            values: values.to_vec(),
            layout: layout.clone(),
        };
        let losses = evaluate(spec, &perturbed, data, train_indices, Criterion::ZeroOne)
            .expect("shapes already validated");
        losses.iter().sum::<f64>() / losses.len() as f64
    };

    let (_, grad) = loss_and_grad(spec, params, data, train_indices, &LossKind::CrossEntropy)?;
    let grad_norm = grad.sq_norm().sqrt();
    let ascent = if grad_norm > 0.0 {
        Some(grad.values().iter().map(|g| g / grad_norm).collect::<Vec<f64>>())
    } else {
        None
    };

    Ok(probe_max(&objective, params.values(), ascent.as_deref(), rho, trials, rng))
}

/// Shared probe core: max of `objective` over the base point and radius-rho
/// perturbations in `trials` random directions plus an optional ascent
/// direction.
pub(crate) fn probe_max(
    objective: &dyn Fn(&[f64]) -> f64,
    base: &[f64],
    ascent: Option<&[f64]>,
    rho: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut best = objective(base);
    if rho == 0.0 {
        return best;
    }
    let dim = base.len();
    let mut candidate = vec![0.0; dim];
    let mut probe = |direction: &[f64]| {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return;
        }
        for (c, (&b, &dir)) in candidate.iter_mut().zip(base.iter().zip(direction)) {
            *c = b + rho * dir / norm;
        }
        let value = objective(&candidate);
        if value > best {
            best = value;
        }
    };
    if let Some(dir) = ascent {
        probe(dir);
    }
    let mut direction = vec![0.0; dim];
    for _ in 0..trials {
        for entry in direction.iter_mut() {
            *entry = rng.sample(StandardNormal);
        }
        probe(&direction);
    }
    best
}

/// Exact trace and an iterative spectral-norm estimate of the cross-entropy
/// Hessian of multinomial logistic regression at `params`.
///
/// With p_i the softmax outputs, the Hessian over the flattened d x c weight
/// matrix is (1/|I|) sum_i (diag(p_i) - p_i p_i^T) (x) x_i x_i^T, so the
/// trace is (1/|I|) sum_i [sum_c p_ic (1 - p_ic)] ||x_i||^2. The spectral
/// norm uses power iteration on the matrix-free Hessian-vector product
/// (tolerance 1e-6, at most 1000 iterations); the Hessian is positive
/// semidefinite, so the iteration tracks the top eigenvalue.
pub fn hessian_trace_logreg(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    indices: &[usize],
) -> Result<(f64, f64)> {
    if spec.kind != ModelKind::LogisticRegression {
        return Err(Error::UnsupportedModel {
            expected: "logistic-regression",
            got: spec.kind.name().to_string(),
        });
    }
    check_indices(indices, data.n())?;
    params.matches(spec)?;

    let base = data.base();
    let d = spec.input_dim;
    let c = spec.class_count;
    let count = indices.len() as f64;
    let probs_rows = forward(spec, params, data, indices)?;

    let mut trace = 0.0;
    for (&i, probs) in indices.iter().zip(&probs_rows) {
        let x_sq: f64 = base.feature_row(i).iter().map(|x| x * x).sum();
        let curvature: f64 = probs.iter().map(|&p| p * (1.0 - p)).sum();
        trace += curvature * x_sq;
    }
    trace /= count;

    let hvp = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&i, probs) in indices.iter().zip(&probs_rows) {
            let x = base.feature_row(i);
            // s = D^T x for v reshaped as D (d x c).
            let mut s = vec![0.0; c];
            for (j, &xj) in x.iter().enumerate() {
                for (class, s_entry) in s.iter_mut().enumerate() {
                    *s_entry += v[j * c + class] * xj;
                }
            }
            let dot: f64 = probs.iter().zip(&s).map(|(&p, &sv)| p * sv).sum();
            for (j, &xj) in x.iter().enumerate() {
                for class in 0..c {
                    out[j * c + class] += xj * probs[class] * (s[class] - dot) / count;
                }
            }
        }
    };

    let dim = d * c;
    let mut rng = derive_rng(0, "hessian-power", &[dim as u64]);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut w = vec![0.0; dim];
    let mut eigenvalue = 0.0;
    for _ in 0..1000 {
        hvp(&v, &mut w);
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let w_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if w_norm == 0.0 {
            return Ok((trace, 0.0));
        }
        for (vi, &wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
        if (next - eigenvalue).abs() <= 1e-6 {
            eigenvalue = next;
            break;
        }
        eigenvalue = next;
    }
    Ok((trace, eigenvalue))
}

fn prop_of<'a>(spec: &ModelSpec, data: &'a Dataset) -> Result<Option<&'a [f64]>> {
    if !spec.needs_graph() {
        return Ok(None);
    }
    match data.as_graph() {
        Some(g) => Ok(Some(g.adjacency())),
        None => Err(Error::invalid("gcn2 needs a graph dataset")),
    }
}

struct ForwardPass {
    /// Per layer: the propagated input M_l = P X_{l-1}, n x dims[l].
    propagated: Vec<Vec<f64>>,
    /// Per layer: the pre-activation Z_l, n x dims[l+1].
    pre_activation: Vec<Vec<f64>>,
    /// Final-layer pre-activation, n x classes.
    logits: Vec<f64>,
    n: usize,
}

fn full_forward(
    spec: &ModelSpec,
    params: &ParameterVector,
    data: &Dataset,
    feature_override: Option<&[f64]>,
) -> Result<ForwardPass> {
    params.matches(spec)?;
    let base = data.base();
    if base.dim() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            what: format!("data dim {} vs model input_dim {}", base.dim(), spec.input_dim),
        });
    }
    if base.classes() != spec.class_count {
        return Err(Error::DimensionMismatch {
            what: format!("data classes {} vs model class_count {}", base.classes(), spec.class_count),
        });
    }
    let prop = prop_of(spec, data)?;

    let n = data.n();
    let dims = spec.dims();
    let layers = dims.len() - 1;
    let mut current = feature_override.unwrap_or(base.features()).to_vec();
    let mut propagated = Vec::with_capacity(layers);
    let mut pre_activation = Vec::with_capacity(layers);
    for l in 0..layers {
        let m = match prop {
            Some(p) => matmul(p, n, n, &current, dims[l]),
            None => current.clone(),
        };
        let z = matmul(&m, n, dims[l], params.matrix(l), dims[l + 1]);
        if l + 1 < layers {
            current = relu(&z);
        }
        propagated.push(m);
        pre_activation.push(z);
    }
    let logits = pre_activation.last().cloned().unwrap_or_default();
    Ok(ForwardPass {
        propagated,
        pre_activation,
        logits,
        n,
    })
}

fn backward(
    spec: &ModelSpec,
    params: &ParameterVector,
    pass: &ForwardPass,
    g_logits: &[f64],
    prop: Option<&[f64]>,
) -> Result<ParameterVector> {
    let dims = spec.dims();
    let layers = dims.len() - 1;
    let n = pass.n;
    let mut grads: Vec<Vec<f64>> = vec![Vec::new(); layers];
    let mut g = g_logits.to_vec();
    for l in (0..layers).rev() {
        grads[l] = matmul_at_b(&pass.propagated[l], n, dims[l], &g, dims[l + 1]);
        if l > 0 {
            // dL/dX_{l-1} = P^T (G W_l^T); P is symmetric, so P^T = P.
            let gm = matmul_a_bt(&g, n, dims[l + 1], params.matrix(l), dims[l]);
            let gx = match prop {
                Some(p) => matmul(p, n, n, &gm, dims[l]),
                None => gm,
            };
            g = relu_mask(&gx, &pass.pre_activation[l - 1]);
        }
    }
    let flat: Vec<f64> = grads.into_iter().flatten().collect();
    ParameterVector::new(flat, params.layout().to_vec())
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

fn relu_mask(g: &[f64], z: &[f64]) -> Vec<f64> {
    g.iter()
        .zip(z)
        .map(|(&gv, &zv)| if zv > 0.0 { gv } else { 0.0 })
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in row.iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

fn softmax_rows(z: &[f64], n: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * c];
    for i in 0..n {
        let row = &z[i * c..(i + 1) * c];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out[i * c + j] = e;
            sum += e;
        }
        for j in 0..c {
            out[i * c + j] /= sum;
        }
    }
    out
}

fn log_softmax_rows(z: &[f64], n: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * c];
    for i in 0..n {
        let row = &z[i * c..(i + 1) * c];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        for (j, &v) in row.iter().enumerate() {
            out[i * c + j] = v - lse;
        }
    }
    out
}

/// Pulls a gradient on softmax outputs back to the logits:
/// g_z = p (.) (g_p - <g_p, p>).
fn softmax_backward(p: &[f64], g_p: &[f64], n: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * c];
    for i in 0..n {
        let pr = &p[i * c..(i + 1) * c];
        let gr = &g_p[i * c..(i + 1) * c];
        let dot: f64 = pr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
        for j in 0..c {
            out[i * c + j] = pr[j] * (gr[j] - dot);
        }
    }
    out
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::invalid("index set must be non-empty"));
    }
    for &i in indices {
        if i >= n {
            return Err(Error::invalid(format!("index {i} out of range for n = {n}")));
        }
    }
    Ok(())
}

/// (n x k)(k x m), row-major. Zero entries of `a` are skipped, so an exact
/// identity matrix propagates bit-identical rows.
fn matmul(a: &[f64], n: usize, k: usize, b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// a^T b for a (n x k), b (n x m): k x m.
fn matmul_at_b(a: &[f64], n: usize, k: usize, b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * m];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * m..(i + 1) * m];
        for (p, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[p * m..(p + 1) * m];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// a b^T for a (n x k), b (m x k): n x m.
fn matmul_a_bt(a: &[f64], n: usize, k: usize, b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..m {
            let brow = &b[j * k..(j + 1) * k];
            out[i * m + j] = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum();
        }
    }
    out
}
