//! Empirical estimation of transductive generalization gaps, and the bound
//! arithmetic that goes with it.
//!
//! A transductive split draws an ordering `Z` of `n = m + u` fixed examples and
//! trains on the first `m`. The gap is the test-average loss minus the
//! train-average loss. This crate provides, in dependency order:
//!
//! - [`rng`]: counter-based seed derivation so every nested draw is
//!   reproducible independent of execution order.
//! - [`sampling`]: permutations, supersamples, selector sequences, the
//!   induced-permutation map between them, and exact small-instance
//!   enumeration used as oracles in tests.
//! - [`info`]: discrete mutual information (plug-in and exact), KL
//!   divergences, and information density. Everything is in nats.
//! - [`bounds`]: closed-form bound evaluators. Pure scalar arithmetic,
//!   no estimation; vacuous values are flagged, never truncated.
//! - [`data`]: synthetic dataset generators (Gaussian blobs, contextual
//!   stochastic block model graphs) and a JSON dataset format.
//! - [`models`]: multinomial logistic regression, a bias-free MLP, and a
//!   two-layer graph convolution network, with hand-coded gradients.
//! - [`optim`]: deterministic SGD / AdaGrad / Adam training loops that log
//!   per-step adaptive-update norms for the trajectory bound.
//! - [`pipeline`]: the nested Monte Carlo protocol (datasets x supersamples
//!   x selectors) producing gap and conditional-MI bound estimates.
//! - [`oracle`]: enumeration-backed verification of the combinatorial and
//!   moment-generating-function facts the bound arithmetic relies on.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod bounds;
pub use bounds::{BoundContext, BoundValue, TrajectoryStats};
pub mod data;
pub mod info;
pub mod models;
pub mod optim;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod sampling;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("train count out of range: need 1 <= m < n, got m = {m}, n = {n}")]
    SplitOutOfRange { m: usize, n: usize },

    #[error("enumeration capacity exceeded: n = {n} but the guard is n <= {max}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("supersample has {supersample_rows} rows but selector sequence has {selector_rows}")]
    RowCountMismatch {
        supersample_rows: usize,
        selector_rows: usize,
    },

    #[error("row {row} has width {got}, expected k + 1 = {expected}")]
    RowWidthMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("histogram is empty; mutual information needs at least one observation")]
    EmptyHistogram,

    #[error("joint probabilities sum to {total}, not 1")]
    UnnormalizedJoint { total: f64 },

    #[error("negative probability {value} at entry {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("absolute continuity violated: q[{index}] = 0 but p[{index}] = {p_val} > 0")]
    NotAbsolutelyContinuous { index: usize, p_val: f64 },

    #[error("distributions have different lengths: p has {p_len}, q has {q_len}")]
    LengthMismatch { p_len: usize, q_len: usize },

    #[error("variance must be positive: {name} = {value}")]
    NonPositiveVariance { name: &'static str, value: f64 },

    #[error("information density undefined at a zero-probability point")]
    ZeroProbabilityPoint,

    #[error("log argument 1 - (1 - e^-a) p = {arg} is not positive (a = {a}, p = {p})")]
    PhiOutOfDomain { a: f64, p: f64, arg: f64 },

    #[error("bound precondition failed: {reason}")]
    BoundPrecondition { reason: String },

    #[error("empty sample list; the estimate needs at least one value")]
    EmptySamples,

    #[error("per-index table has {got} rows, context says m = {expected}")]
    PerIndexRowMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },

    #[error("label {label} at row {row} is outside 0..{classes}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        classes: usize,
    },

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    #[error("training diverged at step {step}: loss = {loss}")]
    TrainingDiverged { step: usize, loss: f64 },

    #[error("operation supports {expected} models only, got {got}")]
    UnsupportedModel {
        expected: &'static str,
        got: String,
    },

    #[error("loss-difference symbols are defined only for k = 1, got k = {k}")]
    LossDifferenceNeedsPairs { k: usize },

    #[error("unknown bound name {name:?}; pipeline bounds are {known:?}")]
    UnknownBound {
        name: String,
        known: &'static [&'static str],
    },

    #[error("trial ({i1}, {i2}, {i3}) failed: {source}")]
    Trial {
        i1: usize,
        i2: usize,
        i3: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            reason: reason.into(),
        }
    }

    pub(crate) fn precondition(reason: impl Into<String>) -> Self {
        Error::BoundPrecondition {
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}
