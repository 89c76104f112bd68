//! Quantile-index properties checked against brute-force references:
//! weights recomputed per observation, quantiles recomputed from the
//! weighted CDF definition, plus monotonicity and interval nesting.

use proxyforest_core::dataset::{Column, Dataset};
use proxyforest_core::forest::{self, FeatureValue, ForestConfig};
use proxyforest_core::quantile::QuantileIndex;
use proxyforest_core::rng::derive_rng;
use proxyforest_testkit::quantile::{ref_quantile, ref_weights};
use rand::Rng;
use std::sync::Arc;

fn train_index(seed: u64, n: usize) -> (QuantileIndex, Vec<f64>) {
    let mut rng = derive_rng(seed, &["qrf", "data"]);
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-100..=100) as f64 / 10.0).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64).collect();
    // piecewise response with repeats so tied-group CDF steps occur
    let y: Vec<f64> = x1
        .iter()
        .zip(&x2)
        .map(|(&a, &b)| (a > 0.0) as i32 as f64 * 3.0 + (b / 2.0).floor())
        .collect();
    let ds = Dataset::from_columns(
        vec![
            ("x1".to_string(), Column::Numeric(x1)),
            ("x2".to_string(), Column::Numeric(x2)),
            ("y".to_string(), Column::Numeric(y.clone())),
        ],
        Some("y"),
    )
    .unwrap();
    let cfg = ForestConfig::regression(seed).with_trees(25).with_min_node_size(3);
    let fit = Arc::new(forest::fit(&ds, &cfg).unwrap());
    (QuantileIndex::new(fit, &ds).unwrap(), y)
}

fn random_row(rng: &mut impl Rng) -> Vec<FeatureValue> {
    vec![
        FeatureValue::Num(rng.random_range(-120..=120) as f64 / 10.0),
        FeatureValue::Num(rng.random_range(-1..=11) as f64),
    ]
}

#[test]
fn weights_are_a_probability_vector_and_match_reference() {
    for seed in 0..10u64 {
        let (index, _) = train_index(seed, 40);
        let mut rng = derive_rng(seed, &["qrf", "query"]);
        for _ in 0..10 {
            let row = random_row(&mut rng);
            let w = index.weights(&row).unwrap();
            assert!(w.iter().all(|&v| v >= 0.0));
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() <= 1e-9, "weights sum {total}");

            let want = ref_weights(index.forest(), &row);
            for (i, (a, b)) in w.iter().zip(&want).enumerate() {
                assert!((a - b).abs() <= 1e-12, "seed {seed} w[{i}] {a} != {b}");
            }
        }
    }
}

#[test]
fn weighted_mean_agrees_with_point_prediction() {
    for seed in 0..10u64 {
        let (index, y) = train_index(seed, 40);
        let mut rng = derive_rng(seed, &["qrf", "mean"]);
        for _ in 0..10 {
            let row = random_row(&mut rng);
            let w = index.weights(&row).unwrap();
            let weighted: f64 = w.iter().zip(&y).map(|(wi, yi)| wi * yi).sum();
            let mean = index.forest().predict_mean(&row).unwrap();
            assert!((weighted - mean).abs() <= 1e-9, "{weighted} != {mean}");
        }
    }
}

#[test]
fn quantiles_match_weighted_cdf_reference() {
    for seed in 0..10u64 {
        let (index, y) = train_index(seed, 40);
        let mut rng = derive_rng(seed, &["qrf", "cdf"]);
        for _ in 0..10 {
            let row = random_row(&mut rng);
            let w = index.weights(&row).unwrap();
            for q in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99] {
                let got = index.quantile(&row, q).unwrap();
                let want = ref_quantile(&y, &w, q).unwrap();
                assert_eq!(got, want, "seed {seed} q {q}");
            }
        }
    }
}

#[test]
fn quantiles_are_monotone_and_are_observed_responses() {
    let (index, y) = train_index(3, 50);
    let mut rng = derive_rng(3, &["qrf", "mono"]);
    let qs: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for _ in 0..5 {
        let row = random_row(&mut rng);
        let values = index.quantiles(&row, &qs).unwrap();
        for pair in values.windows(2) {
            assert!(pair[0] <= pair[1], "{} > {}", pair[0], pair[1]);
        }
        for v in &values {
            assert!(y.contains(v), "{v} not an observed response");
        }
    }
}

#[test]
fn intervals_nest_as_level_grows() {
    let (index, _) = train_index(4, 50);
    let mut rng = derive_rng(4, &["qrf", "nest"]);
    for _ in 0..5 {
        let row = random_row(&mut rng);
        let narrow = index.interval(&row, 0.5).unwrap();
        let mid = index.interval(&row, 0.8).unwrap();
        let wide = index.interval(&row, 0.95).unwrap();
        assert!(wide.lower <= mid.lower && mid.lower <= narrow.lower);
        assert!(narrow.upper <= mid.upper && mid.upper <= wide.upper);
        assert!(narrow.lower <= narrow.upper);
    }
}
