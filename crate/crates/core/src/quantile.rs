//! Quantile regression forests: per-observation weights from shared leaf
//! membership, conditional CDF quantiles over the observed responses, and
//! central prediction intervals.

use std::sync::Arc;

use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{FeatureValue, Forest, Task};

/// Central interval from the weighted response distribution. Both endpoints
/// are observed training responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Query index over a trained regression forest: the training responses
/// plus each tree's leaf memberships (already stored on the forest's
/// leaves, bootstrap multiplicity included).
#[derive(Debug, Clone)]
pub struct QuantileIndex {
    forest: Arc<Forest>,
    y: Vec<f64>,
    /// indices of `y` sorted ascending (stable)
    order: Vec<u32>,
}

impl QuantileIndex {
    /// Build from a forest and the responses it was trained on.
    pub fn from_training(forest: Arc<Forest>, y: Vec<f64>) -> Result<QuantileIndex> {
        if forest.config.task != Task::Regression {
            return Err(Error::Prediction("quantile index needs a regression forest".into()));
        }
        if y.len() != forest.n_train() {
            return Err(Error::Prediction(format!(
                "got {} responses, forest was trained on {}",
                y.len(),
                forest.n_train()
            )));
        }
        if y.is_empty() {
            return Err(Error::EmptyDataset("no training responses".into()));
        }
        let mut order: Vec<u32> = (0..y.len() as u32).collect();
        order.sort_by(|&a, &b| y[a as usize].partial_cmp(&y[b as usize]).expect("finite response"));
        Ok(QuantileIndex { forest, y, order })
    }

    /// Convenience: pull the responses out of the training dataset by the
    /// forest's response column name.
    pub fn new(forest: Arc<Forest>, train: &Dataset) -> Result<QuantileIndex> {
        let y = train.numeric(&forest.response.name)?.to_vec();
        QuantileIndex::from_training(forest, y)
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    /// wᵢ = (1/n_trees)·Σ_t multᵢ,t(row)/|leaf_t(row)|. Non-negative and
    /// summing to 1 for every query row.
    pub fn weights(&self, row: &[FeatureValue]) -> Result<Vec<f64>> {
        self.forest.validate_row(row)?;
        let n = self.y.len();
        let t = self.forest.trees.len() as f64;
        let mut w = vec![0.0; n];
        for tree in &self.forest.trees {
            let (members, _) = tree.leaf(tree.route(row));
            let share = 1.0 / (t * members.len() as f64);
            for &i in members {
                w[i as usize] += share;
            }
        }
        Ok(w)
    }

    /// min{y ∈ observed responses : F̂(y|row) ≥ q}.
    pub fn quantile(&self, row: &[FeatureValue], q: f64) -> Result<f64> {
        let w = self.weights(row)?;
        self.quantile_from_weights(&w, q)
    }

    /// Several quantiles from one weight computation.
    pub fn quantiles(&self, row: &[FeatureValue], qs: &[f64]) -> Result<Vec<f64>> {
        let w = self.weights(row)?;
        qs.iter().map(|&q| self.quantile_from_weights(&w, q)).collect()
    }

    fn quantile_from_weights(&self, w: &[f64], q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::config(format!("quantile level must be in (0,1), got {q}")));
        }
        // accumulate through ties: F̂ steps only at distinct response values
        let mut cdf = 0.0;
        let mut idx = 0usize;
        let n = self.order.len();
        let mut last_positive = None;
        while idx < n {
            let v = self.y[self.order[idx] as usize];
            let mut group_w = 0.0;
            while idx < n && self.y[self.order[idx] as usize] == v {
                group_w += w[self.order[idx] as usize];
                idx += 1;
            }
            cdf += group_w;
            if group_w > 0.0 {
                last_positive = Some(v);
            }
            if cdf >= q {
                return Ok(v);
            }
        }
        // float drift can leave the final cdf a hair under q; the answer is
        // then the largest response with positive weight
        last_positive.ok_or_else(|| Error::Prediction("all weights are zero".into()))
    }

    /// Central interval: quantiles at (1−level)/2 and (1+level)/2.
    pub fn interval(&self, row: &[FeatureValue], level: f64) -> Result<PredictionInterval> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::config(format!("interval level must be in (0,1), got {level}")));
        }
        let w = self.weights(row)?;
        let lower = self.quantile_from_weights(&w, (1.0 - level) / 2.0)?;
        let upper = self.quantile_from_weights(&w, (1.0 + level) / 2.0)?;
        Ok(PredictionInterval { lower, upper, level })
    }

    /// Σᵢ wᵢ·yᵢ; agrees with the forest's mean prediction to within
    /// floating-point reassociation.
    pub fn weighted_mean(&self, row: &[FeatureValue]) -> Result<f64> {
        let w = self.weights(row)?;
        Ok(w.iter().zip(&self.y).map(|(wi, yi)| wi * yi).sum())
    }
}
