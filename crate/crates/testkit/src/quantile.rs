//! Reference weighted-CDF quantile and forest weights, written from the
//! definitions: wᵢ(x) = (1/T)·Σ_t multᵢ,t(x)/|leaf_t(x)| and
//! Q(q|x) = min{y observed : Σ_{yᵢ ≤ y} wᵢ(x) ≥ q}.

use proxyforest_core::forest::{FeatureValue, Forest};

/// Per-observation weights recomputed per observation rather than per
/// tree: count multiplicity in each routed leaf, divide by leaf size and
/// tree count, then sum across trees.
pub fn ref_weights(forest: &Forest, row: &[FeatureValue]) -> Vec<f64> {
    let t = forest.trees.len();
    let leaves: Vec<&[u32]> = forest
        .trees
        .iter()
        .map(|tree| tree.leaf(tree.route(row)).0)
        .collect();
    let n = forest.n_train();
    (0..n as u32)
        .map(|i| {
            leaves
                .iter()
                .map(|members| {
                    let mult = members.iter().filter(|&&m| m == i).count();
                    mult as f64 / (members.len() * t) as f64
                })
                .sum()
        })
        .collect()
}

/// min y with cumulative weight ≥ q, stepping the CDF only at distinct
/// response values (a tied group's weight lands all at once). Falls back
/// to the largest positively-weighted response when rounding leaves the
/// total a hair under q. None when every weight is zero.
pub fn ref_quantile(y: &[f64], w: &[f64], q: f64) -> Option<f64> {
    assert_eq!(y.len(), w.len());
    assert!(q > 0.0 && q < 1.0);
    let mut pairs: Vec<(f64, f64)> = y.iter().copied().zip(w.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut cdf = 0.0;
    let mut last_positive = None;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        let mut group = 0.0;
        while i < pairs.len() && pairs[i].0 == v {
            group += pairs[i].1;
            i += 1;
        }
        cdf += group;
        if group > 0.0 {
            last_positive = Some(v);
        }
        if cdf >= q {
            return Some(v);
        }
    }
    last_positive
}
