//! Exact checks against independent recomputation: a hand-worked graph
//! fixture and a full re-derivation of the exhaustive pipeline average.

use std::path::Path;

use transgap::data::{load_dataset, save_dataset, Dataset};
use transgap::models::{evaluate, Criterion, ModelKind, ModelSpec};
use transgap::optim::{train, OptimizerConfig, OptimizerKind};
use transgap::pipeline::{run_monte_carlo, ExperimentConfig};
use transgap::sampling::enumerate_permutations;

#[test]
fn three_node_path_has_known_normalized_adjacency() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/path3.json");
    let data = load_dataset(&path).unwrap();
    let graph = data.as_graph().expect("fixture declares edges");

    // Path 0-1-2 with self-loops: degrees 2, 3, 2, so the symmetric
    // normalization gives 1/2 and 1/3 on the diagonal and 1/sqrt(6) on the
    // two edges.
    let s = 1.0 / 6.0f64.sqrt();
    let expected = [
        [0.5, s, 0.0],
        [s, 1.0 / 3.0, s],
        [0.0, s, 0.5],
    ];
    for i in 0..3 {
        for j in 0..3 {
            let got = graph.adjacency_row(i)[j];
            assert!(
                (got - expected[i][j]).abs() < 1e-15,
                "adjacency[{i}][{j}] = {got}, expected {}",
                expected[i][j]
            );
        }
    }
    assert_eq!(data.base().labels(), &[0, 1, 0]);
    assert_eq!(data.base().feature_row(1), &[-1.25]);
}

/// The exhaustive pipeline must average the same gaps as training one model
/// per split over a direct enumeration of all splits. Full-batch training
/// from a fixed seed makes the trained model a pure function of the split,
/// so the two computations are interchangeable.
#[test]
fn exhaustive_run_matches_permutation_enumeration() {
    let (n, d, classes, m) = (4usize, 2usize, 2usize, 2usize);
    let base = transgap::data::gen_gaussian_blobs(n, d, classes, 1.5, 99).unwrap();
    let data = Dataset::Tabular(base);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("blobs4.json");
    save_dataset(&data, &file).unwrap();

    let config: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "data": { "source": "file", "path": file.to_str().unwrap() },
        "setting": "random-splitting",
        "m": m,
        "k": 1,
        "t2": 1,
        "t3": 1,
        "model": { "type": "logistic-regression" },
        "optimizer": { "kind": "adagrad", "lr": 0.5, "epsilon": 1e-8, "iterations": 40 },
        "criterion": "zero-one",
        "bounds_requested": ["f-cmi"],
        "master_seed": 9,
        "exhaustive": true
    }))
    .unwrap();
    let output = run_monte_carlo(&config).unwrap();
    assert_eq!(output.report.cells_total, 6, "ordered disjoint pair choices");
    assert_eq!(output.report.cells_used, 6);
    assert_eq!(output.trials.len(), 24, "4!(= 24) splits in total");

    // Independent recomputation: one trained model per permutation, same
    // optimizer seed, gap averaged uniformly.
    let spec = ModelSpec::new(ModelKind::LogisticRegression, d, classes).unwrap();
    let opt = OptimizerConfig {
        kind: OptimizerKind::Adagrad { lr: 0.5, epsilon: 1e-8 },
        batch_size: None,
        iterations: 40,
        seed: 0,
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for perm in enumerate_permutations(n, m).unwrap() {
        let train_idx: Vec<usize> = perm.train().iter().map(|&e| e - 1).collect();
        let test_idx: Vec<usize> = perm.test().iter().map(|&e| e - 1).collect();
        let (params, _, _) = train(&spec, &data, &train_idx, &opt).unwrap();
        let train_losses = evaluate(&spec, &params, &data, &train_idx, Criterion::ZeroOne).unwrap();
        let test_losses = evaluate(&spec, &params, &data, &test_idx, Criterion::ZeroOne).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        total += mean(&test_losses) - mean(&train_losses);
        count += 1;
    }
    assert_eq!(count, 24);
    let direct = total / count as f64;

    assert!(
        (output.report.gap_mean - direct).abs() < 1e-12,
        "pipeline mean {} vs direct enumeration {}",
        output.report.gap_mean,
        direct
    );
}
