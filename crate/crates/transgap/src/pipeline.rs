//! Nested Monte Carlo estimation of generalization gaps and their bounds.
//!
//! The protocol draws t1 datasets (one fixed dataset under random
//! splitting), t2 supersamples per dataset, and t3 selector sequences per
//! supersample. Each (dataset, supersample) pair is a cell; each selector
//! draw inside a cell is a trial that trains a fresh model on the induced
//! split. Gaps and plug-in MI estimates aggregate per cell, then the report
//! averages over cells. Every random draw is derived from the master seed
//! and the trial coordinates, so reruns are bit-identical and cells can be
//! executed in any order or in parallel.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    adagrad_trajectory_bound, pointwise_cmi_bound, BoundContext, CmiVariant, TrajectoryStats,
};
use crate::data::{gen_csbm, gen_gaussian_blobs, load_dataset, Dataset};
use crate::info::{plugin_mutual_information, JointHistogram};
use crate::models::{evaluate, predict, Criterion, ModelKind, ModelSpec};
use crate::optim::{train, OptimizerConfig, OptimizerKind};
use crate::rng::derive_rng;
use crate::sampling::{
    enumerate_supersample_selector_pairs, induce_permutation, sample_selectors,
    sample_supersample, SelectorSequence, Supersample, ENUMERATION_MAX_N,
};
use crate::{Error, Result};

/// Where the split randomness lives: a fixed dataset split at random, or
/// fresh data drawn per outer iteration with the first m labels revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    RandomSplitting,
    RandomSampling,
}

/// Dataset input: a saved file or one of the generators. Generator seeds
/// are derived from the master seed and the dataset coordinate, never
/// stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    File {
        path: String,
    },
    Blobs {
        n: usize,
        d: usize,
        classes: usize,
        separation: f64,
    },
    Csbm {
        n: usize,
        d: usize,
        phi: f64,
        avg_degree: f64,
        feature_snr: f64,
    },
}

impl DataSource {
    /// Size promised by a generator; files are checked after loading.
    pub fn declared_n(&self) -> Option<usize> {
        match self {
            DataSource::File { .. } => None,
            DataSource::Blobs { n, .. } | DataSource::Csbm { n, .. } => Some(*n),
        }
    }
}

/// Bounds the pipeline can estimate from its own trial data. The MI-input
/// evaluators (mutual information, PAC-Bayes, Hessian) take externally
/// supplied quantities and are exercised through the `bounds` command
/// instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestedBound {
    FCmi,
    ECmi,
    IdCmi,
    Trajectory,
}

pub const KNOWN_BOUNDS: &[&str] = &["f-cmi", "e-cmi", "id-cmi", "trajectory"];

impl RequestedBound {
    pub fn name(self) -> &'static str {
        match self {
            RequestedBound::FCmi => "f-cmi",
            RequestedBound::ECmi => "e-cmi",
            RequestedBound::IdCmi => "id-cmi",
            RequestedBound::Trajectory => "trajectory",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "f-cmi" => Ok(RequestedBound::FCmi),
            "e-cmi" => Ok(RequestedBound::ECmi),
            "id-cmi" => Ok(RequestedBound::IdCmi),
            "trajectory" => Ok(RequestedBound::Trajectory),
            _ => Err(Error::UnknownBound {
                name: name.to_string(),
                known: KNOWN_BOUNDS,
            }),
        }
    }
}

fn default_bounds() -> Vec<RequestedBound> {
    vec![RequestedBound::FCmi, RequestedBound::ECmi]
}

fn default_b() -> f64 {
    1.0
}

fn default_loss_bins() -> usize {
    2
}

fn default_trajectory_sigma() -> f64 {
    crate::optim::DEFAULT_SIGMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Report rows carry this id; empty means "exp-{master_seed}".
    #[serde(default)]
    pub experiment_id: String,
    pub data: DataSource,
    pub setting: Setting,
    pub m: usize,
    pub k: usize,
    /// Dataset draws; forced to 1 under random splitting.
    #[serde(default = "crate::pipeline::one")]
    pub t1: usize,
    pub t2: usize,
    pub t3: usize,
    pub model: ModelKind,
    /// The seed field is replaced per trial; leave it at 0 in configs.
    pub optimizer: OptimizerConfig,
    pub criterion: Criterion,
    #[serde(default = "default_bounds")]
    pub bounds_requested: Vec<RequestedBound>,
    pub master_seed: u64,
    /// Loss range the bounds assume. The zero-one criterion always fits in
    /// the default 1; for cross-entropy the caller must pick a cap.
    #[serde(default = "default_b", alias = "B")]
    pub b: f64,
    /// Equal-width bins over [0, b] for e-CMI symbols under cross-entropy;
    /// zero-one losses are used exactly and ignore this.
    #[serde(default = "default_loss_bins")]
    pub loss_bins: usize,
    /// Constant sigma_t schedule for the trajectory bound.
    #[serde(default = "default_trajectory_sigma")]
    pub trajectory_sigma: f64,
    /// Replace sampling with full enumeration of (supersample, selector)
    /// pairs: one cell per supersample, one trial per selector sequence.
    /// Needs m(k+1) <= 10 and random splitting; t1/t2/t3 are ignored and
    /// echoed back as the enumeration counts. The optimizer seed is used
    /// as-is so the trained model is a pure function of the split.
    #[serde(default)]
    pub exhaustive: bool,
}

pub(crate) fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Normalizes derived fields (t1 forcing, default id) and validates.
    pub fn resolved(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        if c.setting == Setting::RandomSplitting {
            c.t1 = 1;
        }
        if c.experiment_id.is_empty() {
            c.experiment_id = format!("exp-{}", c.master_seed);
        }
        let mut seen = Vec::new();
        c.bounds_requested.retain(|b| {
            if seen.contains(b) {
                false
            } else {
                seen.push(*b);
                true
            }
        });
        c.validate()?;
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.m * (self.k + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.k < 1 {
            return Err(Error::invalid(format!(
                "need m >= 1 and k >= 1, got m = {}, k = {}",
                self.m, self.k
            )));
        }
        if self.t1 < 1 || self.t2 < 1 || self.t3 < 1 {
            return Err(Error::invalid(format!(
                "sample counts must be at least 1, got t1 = {}, t2 = {}, t3 = {}",
                self.t1, self.t2, self.t3
            )));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::invalid(format!("loss range must be positive, got {}", self.b)));
        }
        if self.loss_bins < 1 {
            return Err(Error::invalid("loss_bins must be at least 1"));
        }
        if !(self.trajectory_sigma > 0.0) || !self.trajectory_sigma.is_finite() {
            return Err(Error::invalid(format!(
                "trajectory_sigma must be positive, got {}",
                self.trajectory_sigma
            )));
        }
        self.optimizer.validate()?;
        if self.bounds_requested.is_empty() {
            return Err(Error::invalid("bounds_requested must name at least one bound"));
        }
        if self.k > 1 && self.bounds_requested.contains(&RequestedBound::IdCmi) {
            return Err(Error::LossDifferenceNeedsPairs { k: self.k });
        }
        if self.bounds_requested.contains(&RequestedBound::Trajectory)
            && matches!(self.optimizer.kind, OptimizerKind::Sgd { .. })
        {
            return Err(Error::invalid(
                "the trajectory bound covers adagrad and adam runs, not sgd",
            ));
        }
        if self.setting == Setting::RandomSampling && matches!(self.data, DataSource::File { .. })
        {
            return Err(Error::invalid(
                "random-sampling draws fresh datasets and needs a generator source",
            ));
        }
        if let Some(n) = self.data.declared_n() {
            if n != self.n() {
                return Err(Error::invalid(format!(
                    "data source generates n = {n} but m(k+1) = {}",
                    self.n()
                )));
            }
        }
        if self.exhaustive {
            if self.n() > ENUMERATION_MAX_N {
                return Err(Error::EnumerationTooLarge {
                    n: self.n(),
                    max: ENUMERATION_MAX_N,
                });
            }
            if self.setting != Setting::RandomSplitting {
                return Err(Error::invalid(
                    "exhaustive enumeration covers the split randomness of one fixed dataset",
                ));
            }
        }
        Ok(())
    }
}

/// One trained split: everything the estimators need, nothing about the
/// model parameters themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub i1: usize,
    pub i2: usize,
    pub i3: usize,
    /// Predicted labels at each supersample row's slots (m rows, k+1 each).
    pub predictions: Vec<Vec<usize>>,
    /// Losses under the configured criterion at the same slots.
    pub losses: Vec<Vec<f64>>,
    /// Selector rows that produced this trial's split.
    pub selector_rows: Vec<Vec<usize>>,
    pub train_error: f64,
    pub test_error: f64,
    /// test_error - train_error, exactly.
    pub gap: f64,
    /// Per-step squared update norms from this trial's training run.
    pub step_sq_norms: Vec<f64>,
}

/// Per-index plug-in MI estimates for one symbol variant within a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimates {
    pub variant: String,
    pub per_index: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBound {
    pub name: String,
    pub value: f64,
    pub vacuous: bool,
}

/// Estimates from one (dataset, supersample) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub i1: usize,
    pub i2: usize,
    /// Mean gap over the cell's trials.
    pub gap: f64,
    /// Sample standard deviation of the trial gaps.
    pub gap_std: f64,
    pub mi: Vec<MiEstimates>,
    pub bounds: Vec<CellBound>,
}

/// Aggregate over requested bounds: mean and sample std over cells, plus
/// the fraction of cells whose value exceeded the trivial range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub vacuous_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub experiment_id: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub cells_total: usize,
    pub cells_used: usize,
    pub cells_dropped: usize,
    /// Failure descriptions for dropped cells, with trial coordinates.
    pub dropped: Vec<String>,
    pub gap_mean: f64,
    pub gap_std: f64,
    pub bounds: Vec<BoundSummary>,
    pub cells: Vec<CellSummary>,
    /// The resolved configuration this report was produced from.
    pub config: ExperimentConfig,
}

#[derive(Debug)]
pub struct MonteCarloOutput {
    pub report: BoundReport,
    /// Records from surviving cells, in cell-then-trial order.
    pub trials: Vec<TrialRecord>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Mean gap over one cell's records.
pub fn estimate_gap(records: &[TrialRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(records.iter().map(|r| r.gap).sum::<f64>() / records.len() as f64)
}

fn loss_symbol(loss: f64, criterion: Criterion, b: f64, bins: usize) -> u64 {
    match criterion {
        // Zero-one losses are exact already.
        Criterion::ZeroOne => u64::from(loss != 0.0),
        Criterion::CrossEntropy => {
            let idx = (loss / b * bins as f64).floor();
            (idx.max(0.0) as u64).min(bins as u64 - 1)
        }
    }
}

/// Per-index plug-in MI between a symbol of the trial outcome and the
/// selector row, over one cell's t3 records.
///
/// Symbols: `F` is the predicted-label tuple, `E` the loss tuple (exact for
/// zero-one, binned into `loss_bins` equal-width bins over [0, b] for
/// cross-entropy, values past b landing in the last bin), `Id` the signed
/// loss difference between the two slots (pairs only; exact float equality
/// defines symbol identity).
pub fn estimate_disintegrated_cmi(
    records: &[TrialRecord],
    variant: CmiVariant,
    criterion: Criterion,
    b: f64,
    loss_bins: usize,
) -> Result<Vec<f64>> {
    let first = records.first().ok_or(Error::EmptySamples)?;
    let m = first.predictions.len();
    let width = first.predictions.first().map_or(0, Vec::len);
    if m == 0 || width < 2 {
        return Err(Error::invalid("records need m >= 1 rows of k+1 >= 2 slots"));
    }
    if matches!(variant, CmiVariant::Id) && width != 2 {
        return Err(Error::LossDifferenceNeedsPairs { k: width - 1 });
    }
    if !(b > 0.0) || loss_bins < 1 {
        return Err(Error::invalid("need b > 0 and loss_bins >= 1"));
    }
    for r in records {
        if (r.i1, r.i2) != (first.i1, first.i2) {
            return Err(Error::invalid(format!(
                "records span cells ({}, {}) and ({}, {})",
                first.i1, first.i2, r.i1, r.i2
            )));
        }
        if r.predictions.len() != m || r.losses.len() != m || r.selector_rows.len() != m {
            return Err(Error::PerIndexRowMismatch {
                expected: m,
                got: r.predictions.len().min(r.losses.len()).min(r.selector_rows.len()),
            });
        }
    }
    (0..m)
        .map(|i| {
            let hist = JointHistogram::from_pairs(records.iter().map(|r| {
                let symbol: Vec<u64> = match variant {
                    CmiVariant::F => r.predictions[i].iter().map(|&p| p as u64).collect(),
                    CmiVariant::E => r.losses[i]
                        .iter()
                        .map(|&l| loss_symbol(l, criterion, b, loss_bins))
                        .collect(),
                    CmiVariant::Id => vec![(r.losses[i][1] - r.losses[i][0]).to_bits()],
                };
                (symbol, r.selector_rows[i].clone())
            }));
            plugin_mutual_information(&hist)
        })
        .collect()
}

struct CellPlan {
    i1: usize,
    i2: usize,
    supersample: Supersample,
    selectors: Vec<SelectorSequence>,
}

fn build_plans(config: &ExperimentConfig) -> Result<Vec<CellPlan>> {
    if config.exhaustive {
        // Group the flat pair enumeration by supersample; each group is a
        // cell whose trials sweep every selector sequence exactly once.
        let mut groups: BTreeMap<Vec<Vec<usize>>, Vec<SelectorSequence>> = BTreeMap::new();
        for (supersample, selectors) in
            enumerate_supersample_selector_pairs(config.m, config.k)?
        {
            groups.entry(supersample.rows.clone()).or_default().push(selectors);
        }
        return groups
            .into_iter()
            .enumerate()
            .map(|(i2, (rows, selectors))| {
                Ok(CellPlan {
                    i1: 0,
                    i2,
                    supersample: Supersample::new(rows, config.k)?,
                    selectors,
                })
            })
            .collect();
    }
    let mut plans = Vec::with_capacity(config.t1 * config.t2);
    for i1 in 0..config.t1 {
        for i2 in 0..config.t2 {
            let coords = [i1 as u64, i2 as u64];
            let mut rng = derive_rng(config.master_seed, "supersample", &coords);
            let supersample = sample_supersample(config.m, config.k, &mut rng)?;
            let selectors = (0..config.t3)
                .map(|i3| {
                    let coords = [i1 as u64, i2 as u64, i3 as u64];
                    let mut rng = derive_rng(config.master_seed, "selectors", &coords);
                    sample_selectors(config.m, config.k, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            plans.push(CellPlan { i1, i2, supersample, selectors });
        }
    }
    Ok(plans)
}

fn materialize(config: &ExperimentConfig, i1: u64) -> Result<Dataset> {
    match &config.data {
        DataSource::File { path } => load_dataset(Path::new(path)),
        DataSource::Blobs { n, d, classes, separation } => {
            let seed = derive_rng(config.master_seed, "data", &[i1]).gen();
            Ok(gen_gaussian_blobs(*n, *d, *classes, *separation, seed)?.into())
        }
        DataSource::Csbm { n, d, phi, avg_degree, feature_snr } => {
            let seed = derive_rng(config.master_seed, "data", &[i1]).gen();
            Ok(gen_csbm(*n, *d, *phi, *avg_degree, *feature_snr, seed)?.into())
        }
    }
}

fn run_trial(
    config: &ExperimentConfig,
    data: &Dataset,
    spec: &ModelSpec,
    supersample: &Supersample,
    selectors: &SelectorSequence,
    coords: (usize, usize, usize),
) -> Result<TrialRecord> {
    let (i1, i2, i3) = coords;
    let perm = induce_permutation(supersample, selectors)?;
    let mut opt = config.optimizer.clone();
    if !config.exhaustive {
        let coords = [i1 as u64, i2 as u64, i3 as u64];
        opt.seed = derive_rng(config.master_seed, "train", &coords).gen();
    }
    // Permutation entries are 1-based; datasets index from 0.
    let train_idx: Vec<usize> = perm.train().iter().map(|&e| e - 1).collect();
    let (params, trajectory, _batch_losses) = train(spec, data, &train_idx, &opt)?;
    let all: Vec<usize> = (0..data.n()).collect();
    let loss_table = evaluate(spec, &params, data, &all, config.criterion)?;
    let predicted = predict(spec, &params, data, &all)?;
    let mean_over = |entries: &[usize]| {
        entries.iter().map(|&e| loss_table[e - 1]).sum::<f64>() / entries.len() as f64
    };
    let train_error = mean_over(perm.train());
    let test_error = mean_over(perm.test());
    Ok(TrialRecord {
        i1,
        i2,
        i3,
        predictions: supersample
            .rows
            .iter()
            .map(|row| row.iter().map(|&e| predicted[e - 1]).collect())
            .collect(),
        losses: supersample
            .rows
            .iter()
            .map(|row| row.iter().map(|&e| loss_table[e - 1]).collect())
            .collect(),
        selector_rows: selectors.rows.clone(),
        train_error,
        test_error,
        gap: test_error - train_error,
        step_sq_norms: trajectory.per_step_expected_sq_norm.clone(),
    })
}

struct CellOutcome {
    records: Vec<TrialRecord>,
    summary: CellSummary,
}

fn run_cell(
    config: &ExperimentConfig,
    data: &Dataset,
    spec: &ModelSpec,
    ctx: &BoundContext,
    plan: &CellPlan,
) -> Result<CellOutcome> {
    let mut records = Vec::with_capacity(plan.selectors.len());
    for (i3, selectors) in plan.selectors.iter().enumerate() {
        let record = run_trial(config, data, spec, &plan.supersample, selectors, (plan.i1, plan.i2, i3))
            .map_err(|e| Error::Trial {
                i1: plan.i1,
                i2: plan.i2,
                i3,
                source: Box::new(e),
            })?;
        records.push(record);
    }
    let gaps: Vec<f64> = records.iter().map(|r| r.gap).collect();
    let (gap, gap_std) = mean_std(&gaps);
    let mut mi = Vec::new();
    let mut bounds = Vec::new();
    for &requested in &config.bounds_requested {
        match requested {
            RequestedBound::FCmi | RequestedBound::ECmi | RequestedBound::IdCmi => {
                let variant = match requested {
                    RequestedBound::FCmi => CmiVariant::F,
                    RequestedBound::ECmi => CmiVariant::E,
                    _ => CmiVariant::Id,
                };
                let per_index = estimate_disintegrated_cmi(
                    &records,
                    variant,
                    config.criterion,
                    config.b,
                    config.loss_bins,
                )?;
                let rows: Vec<Vec<f64>> = per_index.iter().map(|&v| vec![v]).collect();
                let value = pointwise_cmi_bound(ctx, &rows, variant)?;
                mi.push(MiEstimates {
                    variant: requested.name().to_string(),
                    per_index,
                });
                bounds.push(CellBound {
                    name: requested.name().to_string(),
                    value: value.value,
                    vacuous: value.vacuous,
                });
            }
            RequestedBound::Trajectory => {
                let steps = records[0].step_sq_norms.len();
                let mut mean_steps = vec![0.0; steps];
                for r in &records {
                    for (acc, &sq) in mean_steps.iter_mut().zip(&r.step_sq_norms) {
                        *acc += sq;
                    }
                }
                for acc in &mut mean_steps {
                    *acc /= records.len() as f64;
                }
                let stats = TrajectoryStats::new(
                    mean_steps,
                    vec![config.trajectory_sigma; steps],
                    spec.param_count(),
                )?;
                let value = adagrad_trajectory_bound(ctx, &stats)?;
                bounds.push(CellBound {
                    name: requested.name().to_string(),
                    value: value.value,
                    vacuous: value.vacuous,
                });
            }
        }
    }
    Ok(CellOutcome {
        records,
        summary: CellSummary {
            i1: plan.i1,
            i2: plan.i2,
            gap,
            gap_std,
            mi,
            bounds,
        },
    })
}

/// Runs the full protocol. Cells with a failed trial are dropped from the
/// aggregates and listed in the report; the run itself fails only when no
/// cell survives, propagating the first failure with its coordinates.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<MonteCarloOutput> {
    let mut config = config.resolved()?;
    let datasets: Vec<Dataset> = (0..config.t1)
        .map(|i1| materialize(&config, i1 as u64))
        .collect::<Result<_>>()?;
    let n = config.n();
    for data in &datasets {
        if data.n() != n {
            return Err(Error::invalid(format!(
                "dataset has n = {}, config needs m(k+1) = {n}",
                data.n()
            )));
        }
    }
    let base = datasets[0].base();
    let spec = ModelSpec::new(config.model.clone(), base.dim(), base.classes())?;
    if spec.needs_graph() && datasets.iter().any(|d| d.as_graph().is_none()) {
        return Err(Error::invalid("the model propagates over a graph; the data has no edges"));
    }
    let ctx = BoundContext::new(config.m, config.m * config.k, config.b)?.with_ratio(config.k)?;
    let plans = build_plans(&config)?;
    if config.exhaustive {
        config.t2 = plans.len();
        config.t3 = plans.first().map_or(0, |p| p.selectors.len());
    }

    let outcomes: Vec<Result<CellOutcome>> = plans
        .par_iter()
        .map(|plan| run_cell(&config, &datasets[plan.i1], &spec, &ctx, plan))
        .collect();

    let cells_total = plans.len();
    let mut cells = Vec::new();
    let mut trials = Vec::new();
    let mut dropped = Vec::new();
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(cell) => {
                cells.push(cell.summary);
                trials.extend(cell.records);
            }
            Err(e @ Error::Trial { .. }) => {
                dropped.push(e.to_string());
                if first_failure.is_none() {
                    first_failure = Some(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    if cells.is_empty() {
        return Err(first_failure.expect("no cells planned"));
    }
    cells.sort_by_key(|c| (c.i1, c.i2));

    let (gap_mean, gap_std) = mean_std(&cells.iter().map(|c| c.gap).collect::<Vec<_>>());
    let mut bounds = Vec::new();
    for (j, &requested) in config.bounds_requested.iter().enumerate() {
        let values: Vec<f64> = cells.iter().map(|c| c.bounds[j].value).collect();
        let vacuous = cells.iter().filter(|c| c.bounds[j].vacuous).count();
        let (mean, std) = mean_std(&values);
        bounds.push(BoundSummary {
            name: requested.name().to_string(),
            mean,
            std,
            vacuous_fraction: vacuous as f64 / cells.len() as f64,
        });
    }
    let report = BoundReport {
        experiment_id: config.experiment_id.clone(),
        n,
        m: config.m,
        k: config.k,
        cells_total,
        cells_used: cells.len(),
        cells_dropped: dropped.len(),
        dropped,
        gap_mean,
        gap_std,
        bounds,
        cells,
        config,
    };
    Ok(MonteCarloOutput { report, trials })
}

pub fn render_report_json(report: &BoundReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

pub fn render_trials_jsonl(records: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// One row per reported quantity; the gap rows leave vacuous_fraction empty.
pub fn render_report_csv(report: &BoundReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    writer
        .write_record(["experiment_id", "n", "m", "k", "quantity", "mean", "std", "vacuous_fraction"])
        .map_err(csv_err)?;
    let prefix = [
        report.experiment_id.clone(),
        report.n.to_string(),
        report.m.to_string(),
        report.k.to_string(),
    ];
    let mut row = prefix.to_vec();
    row.extend([
        "gap".to_string(),
        report.gap_mean.to_string(),
        report.gap_std.to_string(),
        String::new(),
    ]);
    writer.write_record(&row).map_err(csv_err)?;
    for bound in &report.bounds {
        let mut row = prefix.to_vec();
        row.extend([
            bound.name.clone(),
            bound.mean.to_string(),
            bound.std.to_string(),
            bound.vacuous_fraction.to_string(),
        ]);
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(format!("csv utf8: {e}")))
}
