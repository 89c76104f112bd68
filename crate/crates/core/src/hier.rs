//! Two-layer model with a latent protected class: a bottom forest predicts
//! the protected attribute from proxy columns, and a top forest predicts
//! the outcome from the non-protected covariates plus that prediction. The
//! raw protected column never enters the top layer, so predictions are
//! invariant to it by construction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::forest::{self, Forest, ForestConfig, LeafValue, Task};

pub const HIER_FORMAT_VERSION: u32 = 1;

/// Name of the derived column carrying the bottom layer's prediction into
/// the top layer.
pub const PREDICTED_PROTECTED: &str = "predicted_protected";

/// How training rows receive their predicted-protected value when fitting
/// the top layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BottomFeed {
    /// Each row is predicted only by trees whose bootstrap sample excluded
    /// it; rows in every tree's bag fall back to the full forest (counted).
    OutOfBag,
    /// Full-forest resubstitution predictions.
    InSample,
}

/// Column roles and per-layer forest configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalSpec {
    pub proxies: Vec<String>,
    pub protected: String,
    pub outcome: String,
    pub top_covariates: Vec<String>,
    pub bottom: ForestConfig,
    pub top: ForestConfig,
    pub feed: BottomFeed,
}

impl HierarchicalSpec {
    /// Validate the unawareness constraints:
    /// the protected column may appear neither among the top covariates nor
    /// among the proxies, and the outcome may not double as a proxy.
    pub fn validate(&self) -> Result<()> {
        if self.proxies.is_empty() {
            return Err(Error::config("proxy column list is empty"));
        }
        if self.top_covariates.iter().any(|c| c == &self.protected) {
            return Err(Error::config(format!(
                "protected column {:?} may not be a top-layer covariate",
                self.protected
            )));
        }
        if self.proxies.iter().any(|c| c == &self.protected) {
            return Err(Error::config(format!(
                "protected column {:?} may not be its own proxy",
                self.protected
            )));
        }
        if self.proxies.iter().any(|c| c == &self.outcome) {
            return Err(Error::config(format!(
                "outcome column {:?} may not be a proxy",
                self.outcome
            )));
        }
        if self.outcome == self.protected {
            return Err(Error::config("outcome and protected columns must differ"));
        }
        if self.top_covariates.iter().any(|c| c == &self.outcome) {
            return Err(Error::config(format!(
                "outcome column {:?} may not be a top-layer covariate",
                self.outcome
            )));
        }
        Ok(())
    }
}

/// Fitted two-layer model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalModel {
    pub format_version: u32,
    pub spec: HierarchicalSpec,
    pub bottom: Forest,
    pub top: Forest,
    /// Training rows that had no out-of-bag tree and fell back to the full
    /// forest when feeding the top layer (0 under in-sample feed).
    pub oob_fallback_rows: usize,
}

/// Fit bottom (proxies → protected) then top (covariates ∪ prediction →
/// outcome). The bottom task follows the protected column's kind.
pub fn fit_hier(ds: &Dataset, spec: &HierarchicalSpec) -> Result<HierarchicalModel> {
    spec.validate()?;

    let mut bottom_cols: Vec<&str> = spec.proxies.iter().map(|s| s.as_str()).collect();
    bottom_cols.push(&spec.protected);
    let bottom_view = ds.select(&bottom_cols)?.set_response(&spec.protected)?;
    let expected_task = match bottom_view.column(&spec.protected)? {
        Column::Numeric(_) => Task::Regression,
        Column::Categorical { .. } => Task::Classification,
        Column::Date(_) => return Err(Error::schema("protected column cannot be a date")),
    };
    if spec.bottom.task != expected_task {
        return Err(Error::config(format!(
            "bottom config task {:?} does not match protected column kind",
            spec.bottom.task
        )));
    }
    let bottom = forest::fit(&bottom_view, &spec.bottom)?;

    let (predicted, fallback) = feed_predictions(&bottom, &bottom_view, spec.feed)?;

    let mut top_cols: Vec<&str> = spec.top_covariates.iter().map(|s| s.as_str()).collect();
    top_cols.push(&spec.outcome);
    let top_view = ds
        .select(&top_cols)?
        .with_column(PREDICTED_PROTECTED, predicted)?
        .set_response(&spec.outcome)?;
    let top = forest::fit(&top_view, &spec.top)?;

    Ok(HierarchicalModel {
        format_version: HIER_FORMAT_VERSION,
        spec: spec.clone(),
        bottom,
        top,
        oob_fallback_rows: fallback,
    })
}

/// Plain single-forest baseline on (covariates → outcome), protected column
/// included among the covariates. Exists so both arms of an experiment run
/// through identical plumbing.
pub fn fit_naive(ds: &Dataset, outcome: &str, covariates: &[&str], cfg: &ForestConfig) -> Result<Forest> {
    if covariates.iter().any(|&c| c == outcome) {
        return Err(Error::config("outcome cannot be a covariate"));
    }
    let mut cols: Vec<&str> = covariates.to_vec();
    cols.push(outcome);
    let view = ds.select(&cols)?.set_response(outcome)?;
    forest::fit(&view, cfg)
}

/// Training-row predicted-protected column per feed mode, with the count of
/// rows that needed the full-forest fallback.
fn feed_predictions(bottom: &Forest, bottom_view: &Dataset, feed: BottomFeed) -> Result<(Column, usize)> {
    let rows = bottom.encode_dataset(bottom_view)?;
    match feed {
        BottomFeed::InSample => {
            let col = match bottom.config.task {
                Task::Regression => {
                    let mut v = Vec::with_capacity(rows.len());
                    for r in &rows {
                        v.push(bottom.predict_mean(r)?);
                    }
                    Column::Numeric(v)
                }
                Task::Classification => {
                    let levels = bottom.response_levels().expect("classification levels").to_vec();
                    let mut codes = Vec::with_capacity(rows.len());
                    for r in &rows {
                        codes.push(bottom.predict_class(r)?.0);
                    }
                    Column::Categorical { levels, codes }
                }
            };
            Ok((col, 0))
        }
        BottomFeed::OutOfBag => {
            let inbag = bottom.inbag_flags();
            let mut fallback = 0usize;
            match bottom.config.task {
                Task::Regression => {
                    let mut v = Vec::with_capacity(rows.len());
                    for (i, r) in rows.iter().enumerate() {
                        let mut sum = 0.0;
                        let mut count = 0usize;
                        for (t, tree) in bottom.trees.iter().enumerate() {
                            if inbag[t][i] {
                                continue;
                            }
                            match tree.leaf(tree.route(r)).1 {
                                LeafValue::Mean(m) => sum += m,
                                LeafValue::Class(_) => unreachable!("regression leaf"),
                            }
                            count += 1;
                        }
                        if count == 0 {
                            fallback += 1;
                            v.push(bottom.predict_mean(r)?);
                        } else {
                            v.push(sum / count as f64);
                        }
                    }
                    Ok((Column::Numeric(v), fallback))
                }
                Task::Classification => {
                    let levels = bottom.response_levels().expect("classification levels").to_vec();
                    let mut codes = Vec::with_capacity(rows.len());
                    for (i, r) in rows.iter().enumerate() {
                        let mut votes = vec![0u32; levels.len()];
                        let mut count = 0usize;
                        for (t, tree) in bottom.trees.iter().enumerate() {
                            if inbag[t][i] {
                                continue;
                            }
                            match tree.leaf(tree.route(r)).1 {
                                LeafValue::Class(c) => votes[c as usize] += 1,
                                LeafValue::Mean(_) => unreachable!("classification leaf"),
                            }
                            count += 1;
                        }
                        if count == 0 {
                            fallback += 1;
                            codes.push(bottom.predict_class(r)?.0);
                        } else {
                            let mut best = 0usize;
                            for l in 1..levels.len() {
                                if votes[l] > votes[best] {
                                    best = l;
                                }
                            }
                            codes.push(best as u32);
                        }
                    }
                    Ok((Column::Categorical { levels, codes }, fallback))
                }
            }
        }
    }
}

impl HierarchicalModel {
    /// Bottom-layer predictions for the rows of `ds` (full forest; query
    /// rows are never in any bag).
    pub fn predict_protected(&self, ds: &Dataset) -> Result<Column> {
        let rows = self.bottom.encode_dataset(ds)?;
        match self.bottom.config.task {
            Task::Regression => {
                let mut v = Vec::with_capacity(rows.len());
                for r in &rows {
                    v.push(self.bottom.predict_mean(r)?);
                }
                Ok(Column::Numeric(v))
            }
            Task::Classification => {
                let levels = self.bottom.response_levels().expect("levels").to_vec();
                let mut codes = Vec::with_capacity(rows.len());
                for r in &rows {
                    codes.push(self.bottom.predict_class(r)?.0);
                }
                Ok(Column::Categorical { levels, codes })
            }
        }
    }

    /// Top-layer query table: the top covariates from `ds` plus the derived
    /// predicted-protected column. Reads proxies and covariates only; any
    /// raw protected column in `ds` is ignored.
    pub fn augment(&self, ds: &Dataset) -> Result<Dataset> {
        let predicted = self.predict_protected(ds)?;
        let cols: Vec<&str> = self.spec.top_covariates.iter().map(|s| s.as_str()).collect();
        ds.select(&cols)?.with_column(PREDICTED_PROTECTED, predicted)
    }

    /// Regression outcome predictions: ŷ⁽¹⁾ = f̂⁽¹⁾(covariates, ŷ⁽²⁾).
    pub fn predict_mean(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.top.predict_mean_batch(&self.augment(ds)?)
    }

    /// Classification outcome predictions (level codes into the top
    /// forest's response levels).
    pub fn predict_class(&self, ds: &Dataset) -> Result<Vec<u32>> {
        self.top.predict_class_batch(&self.augment(ds)?)
    }

    /// Total split nodes on a named column across both layers. Zero for the
    /// raw protected column is the unawareness audit.
    pub fn splits_on(&self, column: &str) -> usize {
        let count = |f: &Forest| {
            f.split_counts()
                .into_iter()
                .filter(|(name, _)| name == column)
                .map(|(_, c)| c)
                .sum::<usize>()
        };
        count(&self.bottom) + count(&self.top)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<HierarchicalModel> {
        let m: HierarchicalModel =
            serde_json::from_str(text).map_err(|e| Error::schema(format!("model file: {e}")))?;
        if m.format_version != HIER_FORMAT_VERSION {
            return Err(Error::schema(format!(
                "model file version {} unsupported (want {HIER_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<HierarchicalModel> {
        HierarchicalModel::from_json(&std::fs::read_to_string(path)?)
    }
}
