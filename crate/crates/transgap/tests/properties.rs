//! Property tests over randomized inputs: bound shape laws, enumeration
//! identities, plug-in MI data processing, and architecture equivalences.

use proptest::prelude::*;
use rand::Rng;

use transgap::bounds::{
    c_mu, cmi_bound, cmi_bound_squared, mi_bound_absolute, mi_bound_expectation, mi_bound_single_draw,
    mi_bound_squared, pointwise_cmi_bound, CmiVariant,
};
use transgap::info::{plugin_mutual_information, JointHistogram};
use transgap::models::{forward, loss_and_grad, LossKind, ModelKind, ModelSpec, ParameterVector};
use transgap::optim::{Optimizer, OptimizerKind};
use transgap::oracle::{exact_expected_gap, gap_multiset_deviation};
use transgap::rng::derive_rng;
use transgap::BoundContext;
use transgap::data::{Dataset, GraphDataset, LabeledDataset};

fn random_table(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = derive_rng(seed, "property-tables", &[n as u64]);
    (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every MI-family evaluator returns a non-negative value that does not
    /// decrease when the information argument grows.
    #[test]
    fn mi_family_nonnegative_and_monotone(
        m in 1usize..=50,
        u in 1usize..=50,
        b in prop::sample::select(vec![0.5, 1.0, 2.0]),
        mi in 0.0..8.0f64,
        extra in 1e-3..4.0f64,
        delta in 0.01..0.5f64,
    ) {
        let ctx = BoundContext::new(m, u, b).unwrap();
        let evals: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
            ("expectation", Box::new(|x| mi_bound_expectation(&ctx, x).unwrap().value)),
            ("squared", Box::new(|x| mi_bound_squared(&ctx, x).unwrap().value)),
            ("single-draw", Box::new(|x| mi_bound_single_draw(&ctx, x, delta).unwrap().value)),
            ("absolute", Box::new(|x| mi_bound_absolute(&ctx, x).unwrap().value)),
        ];
        for (name, eval) in &evals {
            let lo = eval(mi);
            let hi = eval(mi + extra);
            prop_assert!(lo >= 0.0, "{name} returned {lo} < 0");
            prop_assert!(hi >= lo, "{name} decreased: {hi} < {lo}");
        }
    }

    /// Conditional-MI evaluators share the same shape laws; they need u = k m.
    #[test]
    fn cmi_family_nonnegative_and_monotone(
        m in 1usize..=40,
        k in 1usize..=3,
        b in prop::sample::select(vec![0.5, 1.0, 2.0]),
        mi in 0.0..6.0f64,
        extra in 1e-3..3.0f64,
    ) {
        let ctx = BoundContext::new(m, m * k, b).unwrap().with_ratio(k).unwrap();
        let lo = cmi_bound(&ctx, &[mi]).unwrap().value;
        let hi = cmi_bound(&ctx, &[mi + extra]).unwrap().value;
        prop_assert!(lo >= 0.0 && hi >= lo);

        let lo = cmi_bound_squared(&ctx, mi).unwrap().value;
        let hi = cmi_bound_squared(&ctx, mi + extra).unwrap().value;
        prop_assert!(lo >= 0.0 && hi >= lo);

        let rows_lo = vec![vec![mi]; m];
        let rows_hi = vec![vec![mi + extra]; m];
        let lo = pointwise_cmi_bound(&ctx, &rows_lo, CmiVariant::F).unwrap().value;
        let hi = pointwise_cmi_bound(&ctx, &rows_hi, CmiVariant::F).unwrap().value;
        prop_assert!(lo >= 0.0 && hi >= lo);
    }

    /// The combinatorial constant stays within its design range.
    #[test]
    fn split_constant_between_one_and_two(m in 1usize..=80, u in 1usize..=80) {
        let c = c_mu(m, u);
        prop_assert!(c > 1.0 && c <= 2.0, "c_mu({m}, {u}) = {c}");
    }

    /// Averaging the gap over all splits gives exactly zero: train and test
    /// roles are exchangeable.
    #[test]
    fn expected_gap_vanishes(seed: u64, n in 2usize..=7, m_frac in 0.0..1.0f64) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let table = random_table(seed, n);
        let gap = exact_expected_gap(&table, m).unwrap();
        prop_assert!(gap.abs() < 1e-12, "n={n} m={m} gap={gap}");
    }

    /// Enumerating splits directly or through supersample and selector pairs
    /// yields the same multiset of gaps.
    #[test]
    fn split_factorization_preserves_gaps(seed: u64, m in 1usize..=2, k in 1usize..=2) {
        let table = random_table(seed, m * (k + 1));
        let dev = gap_multiset_deviation(&table, m, k).unwrap();
        prop_assert!(dev <= 1e-12, "m={m} k={k} deviation={dev}");
    }

    /// Post-processing a symbol can only lose information about the selector:
    /// plug-in MI of a deterministic function of X never exceeds that of X.
    #[test]
    fn plugin_mi_shrinks_under_postprocessing(
        seed: u64,
        pairs in 2usize..=60,
        alphabet in 2u64..=12,
        modulus in 1u64..=4,
    ) {
        let mut rng = derive_rng(seed, "property-dpi", &[pairs as u64]);
        let samples: Vec<(u64, u64)> = (0..pairs)
            .map(|_| (rng.gen_range(0..alphabet), rng.gen_range(0..2u64)))
            .collect();
        let fine = plugin_mutual_information(&JointHistogram::from_pairs(samples.clone())).unwrap();
        let coarse = plugin_mutual_information(&JointHistogram::from_pairs(
            samples.iter().map(|&(x, u)| (x % modulus, u)),
        ))
        .unwrap();
        prop_assert!(coarse <= fine + 1e-12, "coarse={coarse} fine={fine}");
    }

    /// On an edgeless graph the normalized adjacency is the identity, so the
    /// two-layer graph model computes exactly the one-hidden-layer MLP.
    #[test]
    fn graph_model_on_edgeless_graph_matches_mlp(
        seed: u64,
        n in 2usize..=8,
        d in 1usize..=4,
        hidden in 1usize..=5,
    ) {
        let mut rng = derive_rng(seed, "property-gcn", &[n as u64, d as u64]);
        let features: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let base = LabeledDataset::new(features, labels, d, 2).unwrap();
        let tabular = Dataset::Tabular(base.clone());
        let graph = Dataset::Graph(GraphDataset::new(base, vec![]).unwrap());

        let mlp_spec = ModelSpec::new(ModelKind::Mlp { hidden: vec![hidden] }, d, 2).unwrap();
        let gcn_spec = ModelSpec::new(ModelKind::Gcn2 { hidden }, d, 2).unwrap();
        prop_assert_eq!(mlp_spec.param_count(), gcn_spec.param_count());

        let values: Vec<f64> = (0..mlp_spec.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mlp_params = ParameterVector::new(values.clone(), mlp_spec.layout()).unwrap();
        let gcn_params = ParameterVector::new(values, gcn_spec.layout()).unwrap();

        let idx: Vec<usize> = (0..n).collect();
        let p_mlp = forward(&mlp_spec, &mlp_params, &tabular, &idx).unwrap();
        let p_gcn = forward(&gcn_spec, &gcn_params, &graph, &idx).unwrap();
        for (row_m, row_g) in p_mlp.iter().zip(&p_gcn) {
            for (a, b) in row_m.iter().zip(row_g) {
                prop_assert!((a - b).abs() < 1e-9, "probs differ: {a} vs {b}");
            }
        }

        let (loss_m, grad_m) =
            loss_and_grad(&mlp_spec, &mlp_params, &tabular, &idx, &LossKind::CrossEntropy).unwrap();
        let (loss_g, grad_g) =
            loss_and_grad(&gcn_spec, &gcn_params, &graph, &idx, &LossKind::CrossEntropy).unwrap();
        prop_assert!((loss_m - loss_g).abs() < 1e-9);
        for (a, b) in grad_m.values().iter().zip(grad_g.values()) {
            prop_assert!((a - b).abs() < 1e-9, "grads differ: {a} vs {b}");
        }
    }

    /// The adaptive denominator only accumulates, so under a constant
    /// gradient each update is no longer than the previous one.
    #[test]
    fn adagrad_steps_shrink_under_constant_gradient(
        seed: u64,
        dim in 1usize..=6,
        steps in 2usize..=20,
    ) {
        let mut rng = derive_rng(seed, "property-adagrad", &[dim as u64]);
        let grad: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut opt = Optimizer::new(OptimizerKind::Adagrad { lr: 0.3, epsilon: 1e-8 }, dim);
        let mut previous = f64::INFINITY;
        for _ in 0..steps {
            let update = opt.step(&grad);
            let norm_sq: f64 = update.iter().map(|x| x * x).sum();
            prop_assert!(norm_sq <= previous + 1e-15, "step grew: {norm_sq} > {previous}");
            previous = norm_sq;
        }
    }
}
