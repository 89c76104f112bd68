//! CART decision trees and bootstrap-aggregated random forests.
//!
//! Trees are stored as flat node arrays; a leaf keeps its training members
//! (bootstrap multiplicity preserved) so downstream weighting can recover
//! the bagged empirical measure. All randomness comes from streams derived
//! off `(seed, "tree", t)`, so the result is independent of how trees are
//! scheduled across threads.
//!
//! Split scoring conventions (fixed so independent reimplementations can
//! match bit for bit):
//! - numeric candidates walk the node's members sorted stably by feature
//!   value; left aggregates accumulate in that order, right aggregates are
//!   node totals minus left, and node totals are the full prefix in the
//!   same order;
//! - categorical candidates aggregate per level in member order, with node
//!   totals summed over levels in ascending level order;
//! - regression impurity is sse = sumsq − sum²/n, classification impurity
//!   is n − (Σ count²)/n with exact integer count sums;
//! - the first strictly better candidate wins, scanning features in
//!   ascending id and thresholds/levels in ascending order.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Classification,
}

/// Forest hyperparameters. `mtry = None` means the default
/// `max(1, ⌊√p⌋)` over the p predictor columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub task: Task,
}

impl ForestConfig {
    /// Regression defaults: 500 trees, node size 5, bootstrap on.
    pub fn regression(seed: u64) -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_node_size: 5,
            bootstrap: true,
            seed,
            task: Task::Regression,
        }
    }

    /// Classification defaults: 500 trees, node size 1, bootstrap on.
    pub fn classification(seed: u64) -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_node_size: 1,
            bootstrap: true,
            seed,
            task: Task::Classification,
        }
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_min_node_size(mut self, m: usize) -> Self {
        self.min_node_size = m;
        self
    }

    pub fn with_mtry(mut self, mtry: usize) -> Self {
        self.mtry = Some(mtry);
        self
    }

    pub fn without_bootstrap(mut self) -> Self {
        self.bootstrap = false;
        self
    }
}

/// Feature (or response) type snapshot taken at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
}

/// Split predicate. Numeric sends `value ≤ threshold` left; categorical is
/// one-vs-rest and sends `value = level` left. A query value outside the
/// training levels matches no level, so it always routes to the rest
/// branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    NumericLe { threshold: f64 },
    CatEq { level: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LeafValue {
    Mean(f64),
    Class(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, rule: SplitRule, left: u32, right: u32 },
    Leaf { members: Vec<u32>, value: LeafValue },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf ids are node indices; walk from the root.
    pub fn route(&self, row: &[FeatureValue]) -> usize {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { .. } => return at,
                Node::Split { feature, rule, left, right } => {
                    let goes_left = match (rule, &row[*feature]) {
                        (SplitRule::NumericLe { threshold }, FeatureValue::Num(x)) => {
                            *x <= *threshold
                        }
                        (SplitRule::CatEq { level }, FeatureValue::Cat(c)) => *c == Some(*level),
                        // row validation happens before routing; a kind
                        // mismatch here would be a bug, not bad input
                        _ => unreachable!("row kind mismatch after validation"),
                    };
                    at = if goes_left { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn leaf(&self, id: usize) -> (&[u32], LeafValue) {
        match &self.nodes[id] {
            Node::Leaf { members, value } => (members, *value),
            Node::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }
}

/// A prediction-time cell. `Cat(None)` marks a level unseen at training
/// time (the reserved "other"); it fails every one-vs-rest test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Num(f64),
    Cat(Option<u32>),
}

/// Trained bagged forest. Immutable after fit; prediction methods take
/// `&self` and are safe to call concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub format_version: u32,
    pub config: ForestConfig,
    pub features: Vec<FeatureSchema>,
    pub response: FeatureSchema,
    pub trees: Vec<Tree>,
    /// Per-tree bootstrap draws: exactly n row ids drawn with replacement
    /// (or 0..n−1 when bootstrap is off).
    pub bootstrap: Vec<Vec<u32>>,
}

impl PartialEq for ForestConfig {
    fn eq(&self, other: &Self) -> bool {
        self.n_trees == other.n_trees
            && self.mtry == other.mtry
            && self.min_node_size == other.min_node_size
            && self.bootstrap == other.bootstrap
            && self.seed == other.seed
            && self.task == other.task
    }
}

// Columns borrowed from the training dataset, pre-validated.
enum FeatCol<'a> {
    Num(&'a [f64]),
    Cat { codes: &'a [u32], n_levels: usize },
}

enum Resp<'a> {
    Num(&'a [f64]),
    Cat { codes: &'a [u32], n_levels: usize },
}

struct TrainData<'a> {
    feats: Vec<FeatCol<'a>>,
    resp: Resp<'a>,
    n: usize,
}

/// Fit a forest on the dataset's predictor columns (everything except the
/// response). Date columns must be transformed into features beforehand.
pub fn fit(ds: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    if ds.n() == 0 {
        return Err(Error::EmptyDataset("cannot fit a forest on zero rows".into()));
    }
    if cfg.n_trees < 1 {
        return Err(Error::config("n_trees must be at least 1"));
    }
    if cfg.min_node_size < 1 {
        return Err(Error::config("min_node_size must be at least 1"));
    }

    let resp_name = ds
        .response_name()
        .ok_or_else(|| Error::schema("dataset has no response column"))?
        .to_string();
    let resp = match (cfg.task, ds.response_column()?) {
        (Task::Regression, Column::Numeric(v)) => Resp::Num(v),
        (Task::Classification, Column::Categorical { levels, codes }) => {
            Resp::Cat { codes, n_levels: levels.len() }
        }
        (Task::Regression, _) => {
            return Err(Error::schema("regression needs a numeric response"))
        }
        (Task::Classification, _) => {
            return Err(Error::schema("classification needs a categorical response"))
        }
    };
    let response_schema = FeatureSchema {
        name: resp_name.clone(),
        kind: match ds.response_column()? {
            Column::Numeric(_) => FeatureKind::Numeric,
            Column::Categorical { levels, .. } => {
                FeatureKind::Categorical { levels: levels.clone() }
            }
            Column::Date(_) => unreachable!("rejected above"),
        },
    };

    let mut feats = Vec::new();
    let mut features = Vec::new();
    for name in ds.names() {
        if name == &resp_name {
            continue;
        }
        match ds.column(name)? {
            Column::Numeric(v) => {
                feats.push(FeatCol::Num(v));
                features.push(FeatureSchema { name: name.clone(), kind: FeatureKind::Numeric });
            }
            Column::Categorical { levels, codes } => {
                feats.push(FeatCol::Cat { codes, n_levels: levels.len() });
                features.push(FeatureSchema {
                    name: name.clone(),
                    kind: FeatureKind::Categorical { levels: levels.clone() },
                });
            }
            Column::Date(_) => {
                return Err(Error::schema(format!(
                    "column {name:?} is a date; derive numeric features before fitting"
                )));
            }
        }
    }
    let p = feats.len();
    if p == 0 {
        return Err(Error::schema("no predictor columns"));
    }
    let mtry = match cfg.mtry {
        Some(m) => {
            if m < 1 || m > p {
                return Err(Error::config(format!("mtry {m} out of range 1..={p}")));
            }
            m
        }
        None => std::cmp::max(1, (p as f64).sqrt().floor() as usize),
    };

    let data = TrainData { feats, resp, n: ds.n() };
    let grown: Result<Vec<(Tree, Vec<u32>)>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(&data, cfg, mtry, t))
        .collect();
    let grown = grown?;
    let (trees, bootstrap): (Vec<Tree>, Vec<Vec<u32>>) = grown.into_iter().unzip();

    Ok(Forest {
        format_version: FOREST_FORMAT_VERSION,
        config: cfg.clone(),
        features,
        response: response_schema,
        trees,
        bootstrap,
    })
}

fn grow_tree(data: &TrainData, cfg: &ForestConfig, mtry: usize, t: usize) -> Result<(Tree, Vec<u32>)> {
    let n = data.n;
    let t_label = t.to_string();
    let mut rng = derive_rng(cfg.seed, &["tree", &t_label]);
    let boot: Vec<u32> = if cfg.bootstrap {
        (0..n).map(|_| rng.random_range(0..n) as u32).collect()
    } else {
        (0..n as u32).collect()
    };

    let p = data.feats.len();
    let mut nodes: Vec<Node> = Vec::new();
    nodes.push(Node::Leaf { members: Vec::new(), value: LeafValue::Mean(0.0) });
    let mut work: Vec<(usize, Vec<u32>)> = vec![(0, boot.clone())];

    while let Some((slot, members)) = work.pop() {
        let split = find_split(data, cfg, mtry, p, &members, &mut rng);
        match split {
            None => {
                nodes[slot] = make_leaf(data, members);
            }
            Some(best) => {
                let (left_members, right_members) = partition(data, &members, best.feature, &best.rule);
                let left = nodes.len() as u32;
                nodes.push(Node::Leaf { members: Vec::new(), value: LeafValue::Mean(0.0) });
                let right = nodes.len() as u32;
                nodes.push(Node::Leaf { members: Vec::new(), value: LeafValue::Mean(0.0) });
                nodes[slot] = Node::Split { feature: best.feature, rule: best.rule, left, right };
                work.push((right as usize, right_members));
                work.push((left as usize, left_members));
            }
        }
    }
    Ok((Tree { nodes }, boot))
}

struct BestSplit {
    feature: usize,
    rule: SplitRule,
    score: f64,
}

fn find_split(
    data: &TrainData,
    cfg: &ForestConfig,
    mtry: usize,
    p: usize,
    members: &[u32],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<BestSplit> {
    let m = members.len();
    if m < 2 * cfg.min_node_size || m < 2 {
        return None;
    }
    if is_pure(data, members) {
        return None;
    }

    let mut candidates: Vec<usize> = rand::seq::index::sample(rng, p, mtry).into_vec();
    candidates.sort_unstable();

    let mut best: Option<BestSplit> = None;
    for f in candidates {
        let found = match &data.feats[f] {
            FeatCol::Num(values) => scan_numeric(data, members, f, values),
            FeatCol::Cat { codes, n_levels } => scan_categorical(data, members, f, codes, *n_levels),
        };
        if let Some(c) = found {
            let better = match &best {
                None => true,
                Some(b) => c.score < b.score,
            };
            if better {
                best = Some(c);
            }
        }
    }
    best
}

fn is_pure(data: &TrainData, members: &[u32]) -> bool {
    match &data.resp {
        Resp::Num(y) => {
            let first = y[members[0] as usize];
            members.iter().all(|&i| y[i as usize] == first)
        }
        Resp::Cat { codes, .. } => {
            let first = codes[members[0] as usize];
            members.iter().all(|&i| codes[i as usize] == first)
        }
    }
}

fn sse(sum: f64, sumsq: f64, n: f64) -> f64 {
    sumsq - sum * sum / n
}

fn gini_count(n: u64, class_sumsq: u64) -> f64 {
    n as f64 - class_sumsq as f64 / n as f64
}

fn scan_numeric(data: &TrainData, members: &[u32], f: usize, values: &[f64]) -> Option<BestSplit> {
    let m = members.len();
    let mut order: Vec<u32> = members.to_vec();
    order.sort_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .expect("non-finite feature value")
    });

    let mut best: Option<(f64, f64)> = None; // (score, threshold)
    match &data.resp {
        Resp::Num(y) => {
            let mut total_sum = 0.0;
            let mut total_sumsq = 0.0;
            for &i in &order {
                let v = y[i as usize];
                total_sum += v;
                total_sumsq += v * v;
            }
            let mut left_sum = 0.0;
            let mut left_sumsq = 0.0;
            for k in 0..m - 1 {
                let v = y[order[k] as usize];
                left_sum += v;
                left_sumsq += v * v;
                let a = values[order[k] as usize];
                let b = values[order[k + 1] as usize];
                if a == b {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = (m - k - 1) as f64;
                let score = sse(left_sum, left_sumsq, nl)
                    + sse(total_sum - left_sum, total_sumsq - left_sumsq, nr);
                if best.map_or(true, |(s, _)| score < s) {
                    best = Some((score, midpoint(a, b)));
                }
            }
        }
        Resp::Cat { codes, n_levels } => {
            let mut right_counts = vec![0u64; *n_levels];
            for &i in &order {
                right_counts[codes[i as usize] as usize] += 1;
            }
            let mut right_sumsq: u64 = right_counts.iter().map(|&c| c * c).sum();
            let mut left_counts = vec![0u64; *n_levels];
            let mut left_sumsq: u64 = 0;
            for k in 0..m - 1 {
                let c = codes[order[k] as usize] as usize;
                left_sumsq += 2 * left_counts[c] + 1;
                left_counts[c] += 1;
                right_sumsq -= 2 * right_counts[c] - 1;
                right_counts[c] -= 1;
                let a = values[order[k] as usize];
                let b = values[order[k + 1] as usize];
                if a == b {
                    continue;
                }
                let score = gini_count((k + 1) as u64, left_sumsq)
                    + gini_count((m - k - 1) as u64, right_sumsq);
                if best.map_or(true, |(s, _)| score < s) {
                    best = Some((score, midpoint(a, b)));
                }
            }
        }
    }
    best.map(|(score, threshold)| BestSplit {
        feature: f,
        rule: SplitRule::NumericLe { threshold },
        score,
    })
}

/// Midpoint of two distinct observed values; falls back to the lower value
/// if rounding would push it onto the upper one (adjacent floats).
fn midpoint(a: f64, b: f64) -> f64 {
    let t = (a + b) / 2.0;
    if t >= b || t < a {
        a
    } else {
        t
    }
}

fn scan_categorical(
    data: &TrainData,
    members: &[u32],
    f: usize,
    codes: &[u32],
    n_levels: usize,
) -> Option<BestSplit> {
    let m = members.len() as u64;
    let mut level_n = vec![0u64; n_levels];
    for &i in members {
        level_n[codes[i as usize] as usize] += 1;
    }

    let mut best: Option<(f64, u32)> = None; // (score, level)
    match &data.resp {
        Resp::Num(y) => {
            let mut level_sum = vec![0.0; n_levels];
            let mut level_sumsq = vec![0.0; n_levels];
            for &i in members {
                let c = codes[i as usize] as usize;
                let v = y[i as usize];
                level_sum[c] += v;
                level_sumsq[c] += v * v;
            }
            // node totals: per-level totals summed in ascending level order
            let mut total_sum = 0.0;
            let mut total_sumsq = 0.0;
            for l in 0..n_levels {
                total_sum += level_sum[l];
                total_sumsq += level_sumsq[l];
            }
            for l in 0..n_levels {
                let nl = level_n[l];
                if nl == 0 || nl == m {
                    continue;
                }
                let score = sse(level_sum[l], level_sumsq[l], nl as f64)
                    + sse(total_sum - level_sum[l], total_sumsq - level_sumsq[l], (m - nl) as f64);
                if best.map_or(true, |(s, _)| score < s) {
                    best = Some((score, l as u32));
                }
            }
        }
        Resp::Cat { codes: resp_codes, n_levels: n_resp } => {
            let mut cell = vec![0u64; n_levels * n_resp];
            for &i in members {
                let c = codes[i as usize] as usize;
                let r = resp_codes[i as usize] as usize;
                cell[c * n_resp + r] += 1;
            }
            let mut total_counts = vec![0u64; *n_resp];
            for l in 0..n_levels {
                for r in 0..*n_resp {
                    total_counts[r] += cell[l * n_resp + r];
                }
            }
            for l in 0..n_levels {
                let nl = level_n[l];
                if nl == 0 || nl == m {
                    continue;
                }
                let left_sumsq: u64 = (0..*n_resp).map(|r| cell[l * n_resp + r].pow(2)).sum();
                let right_sumsq: u64 = (0..*n_resp)
                    .map(|r| (total_counts[r] - cell[l * n_resp + r]).pow(2))
                    .sum();
                let score = gini_count(nl, left_sumsq) + gini_count(m - nl, right_sumsq);
                if best.map_or(true, |(s, _)| score < s) {
                    best = Some((score, l as u32));
                }
            }
        }
    }
    best.map(|(score, level)| BestSplit { feature: f, rule: SplitRule::CatEq { level }, score })
}

fn partition(data: &TrainData, members: &[u32], feature: usize, rule: &SplitRule) -> (Vec<u32>, Vec<u32>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &i in members {
        let goes_left = match (rule, &data.feats[feature]) {
            (SplitRule::NumericLe { threshold }, FeatCol::Num(v)) => v[i as usize] <= *threshold,
            (SplitRule::CatEq { level }, FeatCol::Cat { codes, .. }) => codes[i as usize] == *level,
            _ => unreachable!("rule/feature kind mismatch"),
        };
        if goes_left {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    (left, right)
}

fn make_leaf(data: &TrainData, members: Vec<u32>) -> Node {
    let value = match &data.resp {
        Resp::Num(y) => {
            let sum: f64 = members.iter().map(|&i| y[i as usize]).sum();
            LeafValue::Mean(sum / members.len() as f64)
        }
        Resp::Cat { codes, n_levels } => {
            let mut counts = vec![0u64; *n_levels];
            for &i in &members {
                counts[codes[i as usize] as usize] += 1;
            }
            // majority; ties go to the earlier level
            let mut best = 0usize;
            for l in 1..*n_levels {
                if counts[l] > counts[best] {
                    best = l;
                }
            }
            LeafValue::Class(best as u32)
        }
    };
    Node::Leaf { members, value }
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_train(&self) -> usize {
        self.bootstrap.first().map_or(0, |b| b.len())
    }

    /// Levels of a categorical response; `None` for regression.
    pub fn response_levels(&self) -> Option<&[String]> {
        match &self.response.kind {
            FeatureKind::Categorical { levels } => Some(levels),
            FeatureKind::Numeric => None,
        }
    }

    /// Check a query row against the feature schema.
    pub fn validate_row(&self, row: &[FeatureValue]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::Prediction(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.features.len()
            )));
        }
        for (v, f) in row.iter().zip(&self.features) {
            match (v, &f.kind) {
                (FeatureValue::Num(x), FeatureKind::Numeric) => {
                    if !x.is_finite() {
                        return Err(Error::Prediction(format!(
                            "feature {:?}: non-finite value",
                            f.name
                        )));
                    }
                }
                (FeatureValue::Cat(Some(c)), FeatureKind::Categorical { levels }) => {
                    if *c as usize >= levels.len() {
                        return Err(Error::Prediction(format!(
                            "feature {:?}: level code {c} out of range",
                            f.name
                        )));
                    }
                }
                (FeatureValue::Cat(None), FeatureKind::Categorical { .. }) => {}
                _ => {
                    return Err(Error::Prediction(format!(
                        "feature {:?}: value kind does not match schema",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Leaf id (node index) reached by `row` in tree `tree`.
    pub fn leaf_of(&self, tree: usize, row: &[FeatureValue]) -> Result<usize> {
        if tree >= self.trees.len() {
            return Err(Error::Prediction(format!("tree index {tree} out of range")));
        }
        self.validate_row(row)?;
        Ok(self.trees[tree].route(row))
    }

    /// Mean prediction: (1/n_trees)·Σ_t leaf-mean_t(row).
    pub fn predict_mean(&self, row: &[FeatureValue]) -> Result<f64> {
        if self.config.task != Task::Regression {
            return Err(Error::Prediction("predict_mean needs a regression forest".into()));
        }
        self.validate_row(row)?;
        let mut acc = 0.0;
        for tree in &self.trees {
            match tree.leaf(tree.route(row)).1 {
                LeafValue::Mean(m) => acc += m,
                LeafValue::Class(_) => unreachable!("regression leaf holds a mean"),
            }
        }
        Ok(acc / self.trees.len() as f64)
    }

    /// Majority vote with per-level vote fractions. Ties break toward the
    /// earlier level in the response schema.
    pub fn predict_class(&self, row: &[FeatureValue]) -> Result<(u32, Vec<f64>)> {
        if self.config.task != Task::Classification {
            return Err(Error::Prediction("predict_class needs a classification forest".into()));
        }
        self.validate_row(row)?;
        let n_levels = self
            .response_levels()
            .expect("classification forest has response levels")
            .len();
        let mut votes = vec![0u32; n_levels];
        for tree in &self.trees {
            match tree.leaf(tree.route(row)).1 {
                LeafValue::Class(c) => votes[c as usize] += 1,
                LeafValue::Mean(_) => unreachable!("classification leaf holds a class"),
            }
        }
        let mut best = 0usize;
        for l in 1..n_levels {
            if votes[l] > votes[best] {
                best = l;
            }
        }
        let t = self.trees.len() as f64;
        let fractions = votes.iter().map(|&v| v as f64 / t).collect();
        Ok((best as u32, fractions))
    }

    /// Encode a dataset's rows against this forest's feature schema,
    /// matching columns by name and categorical levels by string. Levels
    /// unseen at training time encode as `Cat(None)`.
    pub fn encode_dataset(&self, ds: &Dataset) -> Result<Vec<Vec<FeatureValue>>> {
        enum Src<'a> {
            Num(&'a [f64]),
            Cat { codes: &'a [u32], map: Vec<Option<u32>> },
        }
        let mut sources = Vec::with_capacity(self.features.len());
        for f in &self.features {
            let col = ds.column(&f.name).map_err(|_| {
                Error::Prediction(format!("dataset is missing feature column {:?}", f.name))
            })?;
            let src = match (&f.kind, col) {
                (FeatureKind::Numeric, Column::Numeric(v)) => Src::Num(v),
                (FeatureKind::Categorical { levels }, Column::Categorical { levels: dl, codes }) => {
                    let map = dl
                        .iter()
                        .map(|name| levels.iter().position(|l| l == name).map(|i| i as u32))
                        .collect();
                    Src::Cat { codes, map }
                }
                _ => {
                    return Err(Error::Prediction(format!(
                        "feature column {:?} has the wrong kind",
                        f.name
                    )))
                }
            };
            sources.push(src);
        }
        let n = ds.n();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let row: Vec<FeatureValue> = sources
                .iter()
                .map(|s| match s {
                    Src::Num(v) => FeatureValue::Num(v[i]),
                    Src::Cat { codes, map } => FeatureValue::Cat(map[codes[i] as usize]),
                })
                .collect();
            rows.push(row);
        }
        Ok(rows)
    }

    pub fn predict_mean_batch(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let rows = self.encode_dataset(ds)?;
        rows.iter().map(|r| self.predict_mean(r)).collect()
    }

    pub fn predict_class_batch(&self, ds: &Dataset) -> Result<Vec<u32>> {
        let rows = self.encode_dataset(ds)?;
        rows.iter().map(|r| self.predict_class(r).map(|(c, _)| c)).collect()
    }

    /// How many internal nodes split on each feature, by name. The
    /// unawareness audit checks a forbidden column never appears.
    pub fn split_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.features.len()];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, .. } = node {
                    counts[*feature] += 1;
                }
            }
        }
        self.features
            .iter()
            .zip(counts)
            .map(|(f, c)| (f.name.clone(), c))
            .collect()
    }

    /// In-bag flags per tree: `flags[t][i]` is true when row i entered
    /// tree t's bootstrap sample.
    pub fn inbag_flags(&self) -> Vec<Vec<bool>> {
        let n = self.n_train();
        self.bootstrap
            .iter()
            .map(|b| {
                let mut flags = vec![false; n];
                for &i in b {
                    flags[i as usize] = true;
                }
                flags
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Forest> {
        let f: Forest = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("forest file: {e}")))?;
        if f.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::schema(format!(
                "forest file version {} unsupported (want {FOREST_FORMAT_VERSION})",
                f.format_version
            )));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Forest> {
        Forest::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn ds_xy(x: Vec<f64>, y: Vec<f64>) -> Dataset {
        Dataset::from_columns(
            vec![("x".into(), Column::Numeric(x)), ("y".into(), Column::Numeric(y))],
            Some("y"),
        )
        .unwrap()
    }

    #[test]
    fn constant_response_gives_single_leaf_trees() {
        let ds = ds_xy(vec![1.0, 2.0, 3.0, 4.0], vec![5.0; 4]);
        let cfg = ForestConfig::regression(1).with_trees(10).with_min_node_size(1);
        let f = fit(&ds, &cfg).unwrap();
        for tree in &f.trees {
            assert_eq!(tree.nodes.len(), 1);
        }
        assert_eq!(f.predict_mean(&[FeatureValue::Num(9.9)]).unwrap(), 5.0);
    }

    #[test]
    fn separable_classification_fits_training_data() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let cls: Vec<&str> = x.iter().map(|&v| if v > 0.5 { "hi" } else { "lo" }).collect();
        let ds = Dataset::from_columns(
            vec![
                ("x".into(), Column::Numeric(x.clone())),
                ("c".into(), Column::categorical_from_strings(&cls)),
            ],
            Some("c"),
        )
        .unwrap();
        let cfg = ForestConfig::classification(3).with_trees(50);
        let f = fit(&ds, &cfg).unwrap();
        let pred = f.predict_class_batch(&ds).unwrap();
        let (_, actual) = ds.categorical("c").unwrap();
        assert_eq!(pred, actual.to_vec());
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = ds_xy(
            (0..30).map(|i| (i as f64 * 0.37).sin()).collect(),
            (0..30).map(|i| (i as f64 * 0.11).cos()).collect(),
        );
        let cfg = ForestConfig::regression(42).with_trees(8);
        let a = fit(&ds, &cfg).unwrap();
        let b = fit(&ds, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn mean_of_two_single_leaf_trees() {
        let leaf = |v: f64| Tree {
            nodes: vec![Node::Leaf { members: vec![0], value: LeafValue::Mean(v) }],
        };
        let f = Forest {
            format_version: FOREST_FORMAT_VERSION,
            config: ForestConfig::regression(0).with_trees(2),
            features: vec![FeatureSchema { name: "x".into(), kind: FeatureKind::Numeric }],
            response: FeatureSchema { name: "y".into(), kind: FeatureKind::Numeric },
            trees: vec![leaf(2.0), leaf(4.0)],
            bootstrap: vec![vec![0], vec![0]],
        };
        assert_eq!(f.predict_mean(&[FeatureValue::Num(0.0)]).unwrap(), 3.0);
    }

    #[test]
    fn class_vote_tie_goes_to_earlier_level() {
        let leaf = |c: u32| Tree {
            nodes: vec![Node::Leaf { members: vec![0], value: LeafValue::Class(c) }],
        };
        let f = Forest {
            format_version: FOREST_FORMAT_VERSION,
            config: ForestConfig::classification(0).with_trees(2),
            features: vec![FeatureSchema { name: "x".into(), kind: FeatureKind::Numeric }],
            response: FeatureSchema {
                name: "c".into(),
                kind: FeatureKind::Categorical { levels: vec!["N".into(), "P".into()] },
            },
            trees: vec![leaf(1), leaf(0)],
            bootstrap: vec![vec![0], vec![0]],
        };
        let (code, fractions) = f.predict_class(&[FeatureValue::Num(0.0)]).unwrap();
        assert_eq!(code, 0);
        assert_eq!(fractions, vec![0.5, 0.5]);
    }

    #[test]
    fn leaf_of_examples() {
        let ds = ds_xy(vec![0.0, 1.0], vec![0.0, 10.0]);
        let cfg = ForestConfig::regression(5)
            .with_trees(1)
            .with_min_node_size(1)
            .without_bootstrap();
        let f = fit(&ds, &cfg).unwrap();
        // root split at midpoint 0.5; row x=0.3 goes left
        match &f.trees[0].nodes[0] {
            Node::Split { rule: SplitRule::NumericLe { threshold }, left, .. } => {
                assert_eq!(*threshold, 0.5);
                let id = f.leaf_of(0, &[FeatureValue::Num(0.3)]).unwrap();
                assert_eq!(id, *left as usize);
            }
            other => panic!("expected root split, got {other:?}"),
        }
    }

    #[test]
    fn single_leaf_tree_routes_everything_to_leaf_zero() {
        let ds = ds_xy(vec![1.0, 2.0], vec![7.0, 7.0]);
        let cfg = ForestConfig::regression(5).with_trees(1).without_bootstrap();
        let f = fit(&ds, &cfg).unwrap();
        assert_eq!(f.leaf_of(0, &[FeatureValue::Num(123.0)]).unwrap(), 0);
    }

    #[test]
    fn unseen_level_routes_to_rest_branch() {
        let color = Column::categorical_from_strings(&["red", "red", "blue", "blue"]);
        let ds = Dataset::from_columns(
            vec![("color".into(), color), ("y".into(), Column::Numeric(vec![0.0, 0.0, 8.0, 8.0]))],
            Some("y"),
        )
        .unwrap();
        let cfg = ForestConfig::regression(2)
            .with_trees(1)
            .with_min_node_size(1)
            .without_bootstrap();
        let f = fit(&ds, &cfg).unwrap();
        match &f.trees[0].nodes[0] {
            Node::Split { rule: SplitRule::CatEq { .. }, right, .. } => {
                let id = f.leaf_of(0, &[FeatureValue::Cat(None)]).unwrap();
                assert_eq!(id, *right as usize);
            }
            other => panic!("expected categorical root split, got {other:?}"),
        }
    }

    fn wavy_dataset(n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.77).sin()).collect();
        let z: Vec<f64> = (0..n).map(|i| (i as f64 * 0.33).cos()).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(a, b)| 2.0 * a + b * b + (a * 13.0).sin() * 0.3)
            .collect();
        Dataset::from_columns(
            vec![
                ("x".into(), Column::Numeric(x)),
                ("z".into(), Column::Numeric(z)),
                ("y".into(), Column::Numeric(y)),
            ],
            Some("y"),
        )
        .unwrap()
    }

    #[test]
    fn leaves_partition_the_bootstrap_multiset() {
        let ds = wavy_dataset(60);
        let cfg = ForestConfig::regression(9).with_trees(5);
        let f = fit(&ds, &cfg).unwrap();
        for (tree, boot) in f.trees.iter().zip(&f.bootstrap) {
            let mut leaf_union: Vec<u32> = Vec::new();
            for node in &tree.nodes {
                if let Node::Leaf { members, .. } = node {
                    assert!(!members.is_empty());
                    leaf_union.extend_from_slice(members);
                }
            }
            let mut expect = boot.clone();
            leaf_union.sort_unstable();
            expect.sort_unstable();
            assert_eq!(leaf_union, expect);
        }
    }

    #[test]
    fn accepted_splits_never_increase_impurity() {
        let ds = wavy_dataset(80);
        let cfg = ForestConfig::regression(21).with_trees(3);
        let f = fit(&ds, &cfg).unwrap();
        let y = ds.numeric("y").unwrap();
        let node_sse = |members: &[u32]| {
            let n = members.len() as f64;
            let mean = members.iter().map(|&i| y[i as usize]).sum::<f64>() / n;
            members.iter().map(|&i| (y[i as usize] - mean).powi(2)).sum::<f64>()
        };
        for tree in &f.trees {
            // recover each node's member multiset by walking leaves upward
            fn members_of(tree: &Tree, at: usize, out: &mut Vec<u32>) {
                match &tree.nodes[at] {
                    Node::Leaf { members, .. } => out.extend_from_slice(members),
                    Node::Split { left, right, .. } => {
                        members_of(tree, *left as usize, out);
                        members_of(tree, *right as usize, out);
                    }
                }
            }
            for (id, node) in tree.nodes.iter().enumerate() {
                if let Node::Split { left, right, .. } = node {
                    let mut parent = Vec::new();
                    members_of(tree, id, &mut parent);
                    let mut l = Vec::new();
                    members_of(tree, *left as usize, &mut l);
                    let mut r = Vec::new();
                    members_of(tree, *right as usize, &mut r);
                    assert!(node_sse(&l) + node_sse(&r) <= node_sse(&parent) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn training_mse_beats_constant_predictor() {
        let ds = wavy_dataset(100);
        let cfg = ForestConfig::regression(33).with_trees(30);
        let f = fit(&ds, &cfg).unwrap();
        let pred = f.predict_mean_batch(&ds).unwrap();
        let y = ds.numeric("y").unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        let mse = pred
            .iter()
            .zip(y)
            .map(|(p, a)| (p - a).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        assert!(mse <= var, "mse {mse} var {var}");
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let ds = wavy_dataset(40);
        let cfg = ForestConfig::regression(77).with_trees(4);
        let f = fit(&ds, &cfg).unwrap();
        let json = f.to_json();
        let g = Forest::from_json(&json).unwrap();
        assert_eq!(f, g);
        assert_eq!(json, g.to_json());
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = ds_xy(vec![], vec![]);
        let cfg = ForestConfig::regression(0);
        assert!(matches!(fit(&ds, &cfg), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn mtry_out_of_range_rejected() {
        let ds = ds_xy(vec![1.0, 2.0], vec![1.0, 2.0]);
        let cfg = ForestConfig::regression(0).with_mtry(5);
        assert!(matches!(fit(&ds, &cfg), Err(Error::Config(_))));
    }
}
