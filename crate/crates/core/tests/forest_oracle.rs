//! Grown trees against an independently written CART reference. With all
//! features in play at every node (mtry = p) the grower is deterministic
//! given the bootstrap draws, so the stored trees must match the reference
//! bit for bit: same split features, rules, thresholds, leaf members, and
//! leaf values.

use proxyforest_core::dataset::{Column, Dataset};
use proxyforest_core::forest::{self, ForestConfig};
use proxyforest_core::rng::derive_rng;
use proxyforest_testkit::cart::{diff_core_tree, grow, RefFeature, RefResponse};
use rand::Rng;

enum Resp {
    Regression,
    Classification,
}

/// Small random dataset with tied values on purpose: integer-grid numeric
/// features and responses exercise the tie-skipping and midpoint rules.
fn random_dataset(seed: u64, resp: Resp) -> (Dataset, Vec<RefFeature>, RefResponse) {
    let mut rng = derive_rng(seed, &["oracle", "data"]);
    let n = rng.random_range(4..=8);
    let n_num = rng.random_range(1..=2);
    let n_cat = rng.random_range(0..=2);

    let mut columns: Vec<(String, Column)> = Vec::new();
    let mut ref_features: Vec<RefFeature> = Vec::new();
    for f in 0..n_num {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64 / 2.0).collect();
        columns.push((format!("x{f}"), Column::Numeric(v.clone())));
        ref_features.push(RefFeature::Num(v));
    }
    for f in 0..n_cat {
        let k = rng.random_range(2..=3usize);
        let levels: Vec<String> = (0..k).map(|l| format!("l{l}")).collect();
        let codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..k as u32)).collect();
        columns.push((format!("c{f}"), Column::Categorical { levels, codes: codes.clone() }));
        ref_features.push(RefFeature::Cat { codes, n_levels: k });
    }

    let ref_resp = match resp {
        Resp::Regression => {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..=6) as f64).collect();
            columns.push(("y".to_string(), Column::Numeric(y.clone())));
            RefResponse::Num(y)
        }
        Resp::Classification => {
            let k = rng.random_range(2..=3usize);
            let levels: Vec<String> = (0..k).map(|l| format!("y{l}")).collect();
            let codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..k as u32)).collect();
            columns.push(("y".to_string(), Column::Categorical { levels, codes: codes.clone() }));
            RefResponse::Cat { codes, n_levels: k }
        }
    };

    let ds = Dataset::from_columns(columns, Some("y")).unwrap();
    (ds, ref_features, ref_resp)
}

fn full_mtry(ds: &Dataset) -> usize {
    ds.names().len() - 1
}

#[test]
fn regression_trees_match_reference_without_bootstrap() {
    for seed in 0..50u64 {
        let (ds, features, resp) = random_dataset(seed, Resp::Regression);
        let min_node = 1 + (seed % 2) as usize;
        let cfg = ForestConfig::regression(seed)
            .with_trees(1)
            .without_bootstrap()
            .with_mtry(full_mtry(&ds))
            .with_min_node_size(min_node);
        let fit = forest::fit(&ds, &cfg).unwrap();
        let reference = grow(&features, &resp, min_node, (0..ds.n() as u32).collect());
        if let Some(diff) = diff_core_tree(&reference, &fit.trees[0], 0, "root") {
            panic!("seed {seed}: {diff}");
        }
    }
}

#[test]
fn classification_trees_match_reference_without_bootstrap() {
    for seed in 100..150u64 {
        let (ds, features, resp) = random_dataset(seed, Resp::Classification);
        let cfg = ForestConfig::classification(seed)
            .with_trees(1)
            .without_bootstrap()
            .with_mtry(full_mtry(&ds));
        let fit = forest::fit(&ds, &cfg).unwrap();
        let reference = grow(&features, &resp, 1, (0..ds.n() as u32).collect());
        if let Some(diff) = diff_core_tree(&reference, &fit.trees[0], 0, "root") {
            panic!("seed {seed}: {diff}");
        }
    }
}

#[test]
fn bootstrap_trees_match_reference_replaying_draws() {
    for seed in 200..225u64 {
        let (ds, features, resp) = random_dataset(seed, Resp::Regression);
        let cfg = ForestConfig::regression(seed)
            .with_trees(3)
            .with_mtry(full_mtry(&ds))
            .with_min_node_size(2);
        let fit = forest::fit(&ds, &cfg).unwrap();
        assert_eq!(fit.bootstrap.len(), 3);
        for t in 0..3 {
            let draws = fit.bootstrap[t].clone();
            assert_eq!(draws.len(), ds.n());
            let reference = grow(&features, &resp, 2, draws);
            if let Some(diff) = diff_core_tree(&reference, &fit.trees[t], 0, "root") {
                panic!("seed {seed} tree {t}: {diff}");
            }
        }
    }
    for seed in 225..250u64 {
        let (ds, features, resp) = random_dataset(seed, Resp::Classification);
        let cfg = ForestConfig::classification(seed)
            .with_trees(3)
            .with_mtry(full_mtry(&ds));
        let fit = forest::fit(&ds, &cfg).unwrap();
        for t in 0..3 {
            let reference = grow(&features, &resp, 1, fit.bootstrap[t].clone());
            if let Some(diff) = diff_core_tree(&reference, &fit.trees[t], 0, "root") {
                panic!("seed {seed} tree {t}: {diff}");
            }
        }
    }
}

#[test]
fn subsampled_mtry_refits_identically() {
    for seed in [7u64, 42, 99] {
        let (ds, _, _) = random_dataset(seed, Resp::Regression);
        let cfg = ForestConfig::regression(seed).with_trees(5).with_mtry(1);
        let a = forest::fit(&ds, &cfg).unwrap();
        let b = forest::fit(&ds, &cfg).unwrap();
        assert_eq!(a.trees, b.trees, "seed {seed}");
        assert_eq!(a.bootstrap, b.bootstrap, "seed {seed}");
    }
}
