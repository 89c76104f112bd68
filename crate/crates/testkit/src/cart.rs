//! Exhaustive single-tree CART grower, recomputed fresh at every node
//! from the pinned scoring conventions:
//! - a node splits only when it has at least 2·min_node_size members and
//!   is not response-pure;
//! - numeric candidates walk members stably sorted by feature value, left
//!   aggregates accumulate in that order, right = node totals − left,
//!   node totals are the full prefix in the same order, thresholds are
//!   midpoints (falling back to the lower value when rounding collides);
//! - categorical candidates are one-vs-rest per level, aggregated in
//!   member order, node totals summed in ascending level order;
//! - regression impurity sse = sumsq − sum²/n; classification impurity
//!   n − (Σ count²)/n from exact integer counts;
//! - the first strictly better score wins, features ascending, candidate
//!   positions/levels ascending.
//!
//! The recursion considers every feature (callers compare against forests
//! grown with mtry = p) and takes the root member list from the caller so
//! recorded bootstrap draws can be replayed.

use proxyforest_core::forest::{LeafValue, Node, SplitRule, Tree};

#[derive(Debug, Clone)]
pub enum RefFeature {
    Num(Vec<f64>),
    Cat { codes: Vec<u32>, n_levels: usize },
}

#[derive(Debug, Clone)]
pub enum RefResponse {
    Num(Vec<f64>),
    Cat { codes: Vec<u32>, n_levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefRule {
    Le(f64),
    Eq(u32),
}

#[derive(Debug, Clone)]
pub enum RefTree {
    Leaf { members: Vec<u32>, value: RefValue },
    Split { feature: usize, rule: RefRule, left: Box<RefTree>, right: Box<RefTree> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefValue {
    Mean(f64),
    Class(u32),
}

fn sse(sum: f64, sumsq: f64, n: f64) -> f64 {
    sumsq - sum * sum / n
}

fn gini(n: u64, class_sumsq: u64) -> f64 {
    n as f64 - class_sumsq as f64 / n as f64
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = (a + b) / 2.0;
    if t >= b || t < a {
        a
    } else {
        t
    }
}

fn pure(resp: &RefResponse, members: &[u32]) -> bool {
    match resp {
        RefResponse::Num(y) => members.iter().all(|&i| y[i as usize] == y[members[0] as usize]),
        RefResponse::Cat { codes, .. } => {
            members.iter().all(|&i| codes[i as usize] == codes[members[0] as usize])
        }
    }
}

/// Best (score, rule) over one numeric feature, or None when every value
/// is identical.
fn scan_num(values: &[f64], resp: &RefResponse, members: &[u32]) -> Option<(f64, RefRule)> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| values[a as usize].partial_cmp(&values[b as usize]).unwrap());
    let m = order.len();
    let mut best: Option<(f64, RefRule)> = None;
    for k in 0..m - 1 {
        let a = values[order[k] as usize];
        let b = values[order[k + 1] as usize];
        if a == b {
            continue;
        }
        let score = match resp {
            RefResponse::Num(y) => {
                // fresh prefix accumulation in sorted order
                let mut left_sum = 0.0;
                let mut left_sumsq = 0.0;
                for &i in &order[..=k] {
                    left_sum += y[i as usize];
                    left_sumsq += y[i as usize] * y[i as usize];
                }
                let mut total_sum = 0.0;
                let mut total_sumsq = 0.0;
                for &i in &order {
                    total_sum += y[i as usize];
                    total_sumsq += y[i as usize] * y[i as usize];
                }
                sse(left_sum, left_sumsq, (k + 1) as f64)
                    + sse(total_sum - left_sum, total_sumsq - left_sumsq, (m - k - 1) as f64)
            }
            RefResponse::Cat { codes, n_levels } => {
                let mut left = vec![0u64; *n_levels];
                let mut right = vec![0u64; *n_levels];
                for (pos, &i) in order.iter().enumerate() {
                    if pos <= k {
                        left[codes[i as usize] as usize] += 1;
                    } else {
                        right[codes[i as usize] as usize] += 1;
                    }
                }
                let ls: u64 = left.iter().map(|&c| c * c).sum();
                let rs: u64 = right.iter().map(|&c| c * c).sum();
                gini((k + 1) as u64, ls) + gini((m - k - 1) as u64, rs)
            }
        };
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, RefRule::Le(midpoint(a, b))));
        }
    }
    best
}

fn scan_cat(
    codes: &[u32],
    n_levels: usize,
    resp: &RefResponse,
    members: &[u32],
) -> Option<(f64, RefRule)> {
    let m = members.len() as u64;
    let mut level_n = vec![0u64; n_levels];
    for &i in members {
        level_n[codes[i as usize] as usize] += 1;
    }
    let mut best: Option<(f64, RefRule)> = None;
    for l in 0..n_levels {
        if level_n[l] == 0 || level_n[l] == m {
            continue;
        }
        let score = match resp {
            RefResponse::Num(y) => {
                let mut level_sum = vec![0.0; n_levels];
                let mut level_sumsq = vec![0.0; n_levels];
                for &i in members {
                    let c = codes[i as usize] as usize;
                    level_sum[c] += y[i as usize];
                    level_sumsq[c] += y[i as usize] * y[i as usize];
                }
                let mut total_sum = 0.0;
                let mut total_sumsq = 0.0;
                for c in 0..n_levels {
                    total_sum += level_sum[c];
                    total_sumsq += level_sumsq[c];
                }
                sse(level_sum[l], level_sumsq[l], level_n[l] as f64)
                    + sse(
                        total_sum - level_sum[l],
                        total_sumsq - level_sumsq[l],
                        (m - level_n[l]) as f64,
                    )
            }
            RefResponse::Cat { codes: rc, n_levels: nr } => {
                let mut inside = vec![0u64; *nr];
                let mut outside = vec![0u64; *nr];
                for &i in members {
                    if codes[i as usize] as usize == l {
                        inside[rc[i as usize] as usize] += 1;
                    } else {
                        outside[rc[i as usize] as usize] += 1;
                    }
                }
                let ls: u64 = inside.iter().map(|&c| c * c).sum();
                let rs: u64 = outside.iter().map(|&c| c * c).sum();
                gini(level_n[l], ls) + gini(m - level_n[l], rs)
            }
        };
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, RefRule::Eq(l as u32)));
        }
    }
    best
}

fn leaf(resp: &RefResponse, members: Vec<u32>) -> RefTree {
    let value = match resp {
        RefResponse::Num(y) => {
            let sum: f64 = members.iter().map(|&i| y[i as usize]).sum();
            RefValue::Mean(sum / members.len() as f64)
        }
        RefResponse::Cat { codes, n_levels } => {
            let mut counts = vec![0u64; *n_levels];
            for &i in &members {
                counts[codes[i as usize] as usize] += 1;
            }
            let mut best = 0;
            for l in 1..*n_levels {
                if counts[l] > counts[best] {
                    best = l;
                }
            }
            RefValue::Class(best as u32)
        }
    };
    RefTree::Leaf { members, value }
}

pub fn grow(
    features: &[RefFeature],
    resp: &RefResponse,
    min_node_size: usize,
    members: Vec<u32>,
) -> RefTree {
    if members.len() < 2 * min_node_size || members.len() < 2 || pure(resp, &members) {
        return leaf(resp, members);
    }
    let mut best: Option<(f64, usize, RefRule)> = None;
    for (f, feature) in features.iter().enumerate() {
        let found = match feature {
            RefFeature::Num(v) => scan_num(v, resp, &members),
            RefFeature::Cat { codes, n_levels } => scan_cat(codes, *n_levels, resp, &members),
        };
        if let Some((score, rule)) = found {
            if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                best = Some((score, f, rule));
            }
        }
    }
    let Some((_, feature, rule)) = best else {
        return leaf(resp, members);
    };
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for &i in &members {
        let goes_left = match (&rule, &features[feature]) {
            (RefRule::Le(t), RefFeature::Num(v)) => v[i as usize] <= *t,
            (RefRule::Eq(l), RefFeature::Cat { codes, .. }) => codes[i as usize] == *l,
            _ => unreachable!(),
        };
        if goes_left {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    RefTree::Split {
        feature,
        rule,
        left: Box::new(grow(features, resp, min_node_size, left)),
        right: Box::new(grow(features, resp, min_node_size, right)),
    }
}

/// Bit-exact structural comparison against a stored tree, starting at its
/// node `at`. Returns a path description of the first mismatch.
pub fn diff_core_tree(reference: &RefTree, tree: &Tree, at: usize, path: &str) -> Option<String> {
    match (reference, &tree.nodes[at]) {
        (
            RefTree::Leaf { members: rm, value: rv },
            Node::Leaf { members, value },
        ) => {
            if rm != members {
                return Some(format!("{path}: leaf members {members:?} != {rm:?}"));
            }
            let same = match (rv, value) {
                (RefValue::Mean(a), LeafValue::Mean(b)) => a.to_bits() == b.to_bits(),
                (RefValue::Class(a), LeafValue::Class(b)) => a == b,
                _ => false,
            };
            if !same {
                return Some(format!("{path}: leaf value {value:?} != {rv:?}"));
            }
            None
        }
        (
            RefTree::Split { feature: rf, rule: rr, left: rl, right: rrt },
            Node::Split { feature, rule, left, right },
        ) => {
            if rf != feature {
                return Some(format!("{path}: split feature {feature} != {rf}"));
            }
            let same = match (rr, rule) {
                (RefRule::Le(a), SplitRule::NumericLe { threshold }) => {
                    a.to_bits() == threshold.to_bits()
                }
                (RefRule::Eq(a), SplitRule::CatEq { level }) => a == level,
                _ => false,
            };
            if !same {
                return Some(format!("{path}: split rule {rule:?} != {rr:?}"));
            }
            diff_core_tree(rl, tree, *left as usize, &format!("{path}L"))
                .or_else(|| diff_core_tree(rrt, tree, *right as usize, &format!("{path}R")))
        }
        (r, n) => Some(format!("{path}: node kind {n:?} != {r:?}")),
    }
}
