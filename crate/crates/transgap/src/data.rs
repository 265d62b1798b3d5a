//! Synthetic datasets and dataset files.
//!
//! Two generators cover the experiments: Gaussian blobs for plain tabular
//! classification and a contextual stochastic block model (cSBM) for graphs.
//! Both are pure functions of their parameters and a seed. Graphs carry a
//! dense symmetric normalized adjacency with self-loops,
//! `A~ = D~^{-1/2} (A + I) D~^{-1/2}`, which is what the graph model consumes;
//! instance sizes here stay small enough that dense storage is the simpler
//! and more transparent choice.
//!
//! Files are single JSON documents `{n, d, classes, features, labels, edges?}`
//! with row-major features; `edges` present means a graph dataset. Doubles
//! survive a save/load round trip bit-exactly.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::derive_rng;
use crate::{Error, Result};

/// Feature matrix plus labels. Features are row-major, length n * d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    d: usize,
    classes: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, d: usize, classes: usize) -> Result<Self> {
        if d == 0 || classes < 2 {
            return Err(Error::invalid(format!(
                "need d >= 1 and classes >= 2, got d = {d}, classes = {classes}"
            )));
        }
        if features.len() != labels.len() * d {
            return Err(Error::DimensionMismatch {
                what: format!(
                    "{} feature values for {} examples of dimension {d}",
                    features.len(),
                    labels.len()
                ),
            });
        }
        for (row, &label) in labels.iter().enumerate() {
            if label >= classes {
                return Err(Error::LabelOutOfRange { row, label, classes });
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Self {
            features,
            labels,
            d,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }
}

/// A labeled dataset with graph structure. The normalized adjacency is built
/// once from the deduplicated undirected edge list and kept dense.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    base: LabeledDataset,
    edges: Vec<(usize, usize)>,
    adjacency_normalized: Vec<f64>,
}

impl GraphDataset {
    pub fn new(base: LabeledDataset, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = base.n();
        let canonical = canonical_edges(&edges, n)?;
        let adjacency_normalized = normalize_adjacency(&canonical, n)?;
        Ok(Self {
            base,
            edges: canonical,
            adjacency_normalized,
        })
    }

    pub fn base(&self) -> &LabeledDataset {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// Deduplicated edges with i < j, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Dense n * n normalized adjacency, row-major.
    pub fn adjacency(&self) -> &[f64] {
        &self.adjacency_normalized
    }

    pub fn adjacency_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.adjacency_normalized[i * n..(i + 1) * n]
    }
}

/// Either dataset kind, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Tabular(LabeledDataset),
    Graph(GraphDataset),
}

impl Dataset {
    pub fn base(&self) -> &LabeledDataset {
        match self {
            Dataset::Tabular(d) => d,
            Dataset::Graph(g) => g.base(),
        }
    }

    pub fn n(&self) -> usize {
        self.base().n()
    }

    pub fn as_graph(&self) -> Option<&GraphDataset> {
        match self {
            Dataset::Tabular(_) => None,
            Dataset::Graph(g) => Some(g),
        }
    }
}

impl From<LabeledDataset> for Dataset {
    fn from(d: LabeledDataset) -> Self {
        Dataset::Tabular(d)
    }
}

impl From<GraphDataset> for Dataset {
    fn from(g: GraphDataset) -> Self {
        Dataset::Graph(g)
    }
}

/// Isotropic Gaussian clusters: class c is centered at separation * e_{c mod d}
/// with unit-variance noise, labels assigned round-robin so counts are
/// balanced within one.
pub fn gen_gaussian_blobs(
    n: usize,
    d: usize,
    classes: usize,
    separation: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if classes < 2 || n < classes {
        return Err(Error::invalid(format!(
            "need n >= classes >= 2, got n = {n}, classes = {classes}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("need d >= 1"));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::invalid(format!("separation must be finite and non-negative, got {separation}")));
    }
    let mut rng = derive_rng(seed, "blobs", &[]);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        labels.push(c);
        for j in 0..d {
            let mean = if j == c % d { separation } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            features.push(mean + noise);
        }
    }
    LabeledDataset::new(features, labels, d, classes)
}

/// The (lambda, mu) mixing behind `gen_csbm`: lambda scales the degree gap
/// between intra- and inter-community edges, mu the class-aligned feature
/// signal. With gamma = n/d,
///
/// ```text
/// lambda = sqrt(1 + snr) * sin(phi * pi/2)
/// mu     = sqrt(gamma * (1 + snr)) * cos(phi * pi/2)
/// ```
///
/// so phi = 0 puts everything in the features, |phi| = 1 everything in the
/// graph, and the sign of phi picks homophily vs heterophily. This follows
/// the usual arc parameterization of the cSBM literature; treat the constants
/// as tunable, not canonical.
pub fn csbm_mixing(phi: f64, feature_snr: f64, n: usize, d: usize) -> (f64, f64) {
    let gamma = n as f64 / d as f64;
    let angle = phi * std::f64::consts::FRAC_PI_2;
    let lambda = (1.0 + feature_snr).sqrt() * angle.sin();
    // cos(pi/2) is not exactly zero in floats; the endpoints mean "no
    // feature signal" and "no degree gap" exactly.
    let mu = if phi.abs() == 1.0 {
        0.0
    } else {
        (gamma * (1.0 + feature_snr)).sqrt() * angle.cos()
    };
    let lambda = if phi == 0.0 { 0.0 } else { lambda };
    (lambda, mu)
}

/// Contextual stochastic block model: two balanced communities, intra/inter
/// edge probabilities (d_bar +- lambda sqrt(d_bar))/n, and features
/// x_i = sqrt(mu/n) (2 y_i - 1) v + xi_i / sqrt(d) for a seeded random unit
/// vector v and standard normal noise xi_i.
pub fn gen_csbm(
    n: usize,
    d: usize,
    phi: f64,
    avg_degree: f64,
    feature_snr: f64,
    seed: u64,
) -> Result<GraphDataset> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!("n must be even and at least 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("need d >= 1"));
    }
    if !(-1.0..=1.0).contains(&phi) {
        return Err(Error::invalid(format!("phi must lie in [-1, 1], got {phi}")));
    }
    if !(avg_degree > 0.0) || !avg_degree.is_finite() {
        return Err(Error::invalid(format!("avg_degree must be positive, got {avg_degree}")));
    }
    if !(feature_snr >= 0.0) || !feature_snr.is_finite() {
        return Err(Error::invalid(format!("feature_snr must be non-negative, got {feature_snr}")));
    }
    let (lambda, mu) = csbm_mixing(phi, feature_snr, n, d);
    let root_deg = avg_degree.sqrt();
    let p_in = ((avg_degree + lambda * root_deg) / n as f64).max(0.0);
    let p_out = ((avg_degree - lambda * root_deg) / n as f64).max(0.0);
    if p_in > 1.0 || p_out > 1.0 {
        return Err(Error::invalid(format!(
            "edge probabilities out of range: p_in = {p_in}, p_out = {p_out}; lower avg_degree or raise n"
        )));
    }

    let mut rng = derive_rng(seed, "csbm", &[]);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();

    // Direction first, then features, then edges: feature bytes are then
    // independent of the edge probabilities for a fixed seed.
    let mut v = vec![0.0f64; d];
    loop {
        for entry in v.iter_mut() {
            *entry = rng.sample(StandardNormal);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for entry in v.iter_mut() {
                *entry /= norm;
            }
            break;
        }
    }

    let signal = (mu / n as f64).sqrt();
    let root_d = (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    for (i, &y) in labels.iter().enumerate() {
        let sign = 2.0 * y as f64 - 1.0;
        for (j, &vj) in v.iter().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            let _ = (i, j);
            features.push(signal * sign * vj + noise / root_d);
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let base = LabeledDataset::new(features, labels, d, 2)?;
    GraphDataset::new(base, edges)
}

/// Symmetric normalized adjacency with self-loops,
/// D~^{-1/2} (A + I) D~^{-1/2}, as a dense row-major n * n matrix. Input
/// edges are undirected; duplicates and self-loops are ignored.
pub fn normalize_adjacency(edges: &[(usize, usize)], n: usize) -> Result<Vec<f64>> {
    let canonical = canonical_edges(edges, n)?;
    let mut degree = vec![1.0f64; n];
    for &(i, j) in &canonical {
        degree[i] += 1.0;
        degree[j] += 1.0;
    }
    let inv_root: Vec<f64> = degree.iter().map(|&deg| 1.0 / deg.sqrt()).collect();
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        out[i * n + i] = inv_root[i] * inv_root[i];
    }
    for &(i, j) in &canonical {
        let w = inv_root[i] * inv_root[j];
        out[i * n + j] = w;
        out[j * n + i] = w;
    }
    Ok(out)
}

fn canonical_edges(edges: &[(usize, usize)], n: usize) -> Result<Vec<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
        }
        if a == b {
            continue;
        }
        set.insert((a.min(b), a.max(b)));
    }
    Ok(set.into_iter().collect())
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    n: usize,
    d: usize,
    classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
}

pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let base = data.base();
    let file = DatasetFile {
        n: base.n(),
        d: base.dim(),
        classes: base.classes(),
        features: base.features().to_vec(),
        labels: base.labels().to_vec(),
        edges: data.as_graph().map(|g| g.edges().to_vec()),
    };
    let mut text = serde_json::to_string(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)?;
    if file.labels.len() != file.n {
        return Err(Error::DimensionMismatch {
            what: format!("{} labels for n = {}", file.labels.len(), file.n),
        });
    }
    let base = LabeledDataset::new(file.features, file.labels, file.d, file.classes)?;
    match file.edges {
        None => Ok(Dataset::Tabular(base)),
        Some(edges) => Ok(Dataset::Graph(GraphDataset::new(base, edges)?)),
    }
}
