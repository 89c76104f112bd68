//! Calendar-complete daily aggregation of interview records and the
//! lag-driven occurrence forecaster built on it.
//!
//! Panel rows cover every day between the earliest and latest record.
//! Day counts become the regression response; categorical activity enters
//! as per-day occurrence proportions (reason clusters, race levels,
//! predicted race levels, districts), each family summing to 1 on days
//! with any records and to 0 on flagged zero days. Every raw column also
//! gets a lag-1 copy; the first panel day has no predecessor, its lag
//! cells hold 0 and the row is excluded from training.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{Days, NaiveDate};

use super::InterviewRecord;
use crate::dataset::{quarter_dummies, Column, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::forest::{fit, Forest, ForestConfig};
use crate::metrics::{regression_report, RegressionReport};
use crate::quantile::{PredictionInterval, QuantileIndex};
use crate::rng::derive_seed_u64;

#[derive(Debug, Clone)]
pub struct DailyPanel {
    pub data: Dataset,
    pub dates: Vec<NaiveDate>,
    pub reason_k: usize,
    pub race_levels: Vec<String>,
    pub district_levels: Vec<String>,
}

impl DailyPanel {
    /// Raw (unlagged) proportion and count columns, in panel order.
    pub fn raw_feature_names(&self) -> Vec<String> {
        let mut names = vec!["count".to_string(), "zero_day".to_string()];
        names.extend((1..=self.reason_k).map(|c| format!("p_reason_{c}")));
        names.extend(self.race_levels.iter().map(|l| format!("p_race_{l}")));
        names.extend(self.race_levels.iter().map(|l| format!("p_pred_race_{l}")));
        names.extend(self.district_levels.iter().map(|l| format!("p_district_{l}")));
        names.extend(["q2", "q3", "q4"].map(String::from));
        names
    }

    fn lag_block(&self, observed_race: bool) -> Vec<String> {
        let mut names = vec!["lag_count".to_string()];
        names.extend((1..=self.reason_k).map(|c| format!("lag_p_reason_{c}")));
        let race_prefix = if observed_race { "lag_p_race" } else { "lag_p_pred_race" };
        names.extend(self.race_levels.iter().map(|l| format!("{race_prefix}_{l}")));
        names.extend(self.district_levels.iter().map(|l| format!("lag_p_district_{l}")));
        names
    }

    /// Occurrence-model features: yesterday's count and proportion blocks
    /// plus today's quarter indicators. The race block is observed
    /// proportions for the direct arm, bottom-layer predictions for the
    /// unaware arm.
    pub fn feature_names(&self, observed_race: bool) -> Vec<String> {
        let mut names = self.lag_block(observed_race);
        names.extend(["q2", "q3", "q4"].map(String::from));
        names
    }
}

fn proportions(counts: &[usize], total: usize) -> Vec<f64> {
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Builds the panel. `reason_cluster` holds each record's 1-based cluster
/// id; `race_pred` holds the bottom layer's predicted race level per
/// record (observed race comes from the records themselves).
pub fn build_daily_panel(
    records: &[InterviewRecord],
    reason_cluster: &[usize],
    reason_k: usize,
    race_pred: &[String],
) -> Result<DailyPanel> {
    if records.is_empty() {
        return Err(Error::EmptyDataset("no records to aggregate".into()));
    }
    if records.len() != reason_cluster.len() || records.len() != race_pred.len() {
        return Err(Error::schema(format!(
            "records ({}), reason clusters ({}) and race predictions ({}) differ in length",
            records.len(),
            reason_cluster.len(),
            race_pred.len()
        )));
    }
    if let Some(&bad) = reason_cluster.iter().find(|&&c| c < 1 || c > reason_k) {
        return Err(Error::schema(format!("reason cluster id {bad} outside 1..={reason_k}")));
    }

    let race_levels: Vec<String> = records
        .iter()
        .map(|r| r.race.clone())
        .chain(race_pred.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let district_levels: Vec<String> = records
        .iter()
        .map(|r| r.district.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let level_index = |levels: &[String], v: &str| -> usize {
        levels.iter().position(|l| l == v).expect("level collected above")
    };

    let start = records.iter().map(|r| r.date).min().expect("non-empty");
    let end = records.iter().map(|r| r.date).max().expect("non-empty");
    let n_days = (end - start).num_days() as usize + 1;
    let dates: Vec<NaiveDate> = (0..n_days).map(|i| start + Days::new(i as u64)).collect();

    let mut count = vec![0usize; n_days];
    let mut reason_counts = vec![vec![0usize; n_days]; reason_k];
    let mut race_counts = vec![vec![0usize; n_days]; race_levels.len()];
    let mut pred_race_counts = vec![vec![0usize; n_days]; race_levels.len()];
    let mut district_counts = vec![vec![0usize; n_days]; district_levels.len()];
    for (i, r) in records.iter().enumerate() {
        let day = (r.date - start).num_days() as usize;
        count[day] += 1;
        reason_counts[reason_cluster[i] - 1][day] += 1;
        race_counts[level_index(&race_levels, &r.race)][day] += 1;
        pred_race_counts[level_index(&race_levels, &race_pred[i])][day] += 1;
        district_counts[level_index(&district_levels, &r.district)][day] += 1;
    }

    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    raw.push(("count".into(), count.iter().map(|&c| c as f64).collect()));
    raw.push(("zero_day".into(), count.iter().map(|&c| if c == 0 { 1.0 } else { 0.0 }).collect()));
    let family = |name_of: &dyn Fn(usize) -> String, counts: &[Vec<usize>], raw: &mut Vec<(String, Vec<f64>)>| {
        for (j, per_day) in counts.iter().enumerate() {
            let vals: Vec<f64> =
                (0..n_days).map(|d| proportions(&[per_day[d]], count[d])[0]).collect();
            raw.push((name_of(j), vals));
        }
    };
    family(&|j| format!("p_reason_{}", j + 1), &reason_counts, &mut raw);
    family(&|j| format!("p_race_{}", race_levels[j]), &race_counts, &mut raw);
    family(&|j| format!("p_pred_race_{}", race_levels[j]), &pred_race_counts, &mut raw);
    family(&|j| format!("p_district_{}", district_levels[j]), &district_counts, &mut raw);
    let (q2, q3, q4) = quarter_dummies(&dates);
    raw.push(("q2".into(), q2));
    raw.push(("q3".into(), q3));
    raw.push(("q4".into(), q4));

    let mut columns: Vec<(String, Column)> = vec![("date".into(), Column::Date(dates.clone()))];
    for (name, vals) in &raw {
        columns.push((name.clone(), Column::Numeric(vals.clone())));
    }
    for (name, vals) in &raw {
        let mut lagged = Vec::with_capacity(n_days);
        lagged.push(0.0);
        lagged.extend_from_slice(&vals[..n_days - 1]);
        columns.push((format!("lag_{name}"), Column::Numeric(lagged)));
    }
    let data = Dataset::from_columns(columns, None)?;
    Ok(DailyPanel { data, dates, reason_k, race_levels, district_levels })
}

#[derive(Debug, Clone)]
pub struct OccurrenceConfig {
    pub n_trees: usize,
    pub min_node_size: usize,
    pub mtry: Option<usize>,
    /// Prediction-interval level, e.g. 0.9.
    pub pi_level: f64,
    /// Days at or after this date form the test period.
    pub cutoff: NaiveDate,
    pub seed: u64,
}

impl OccurrenceConfig {
    pub fn new(seed: u64, cutoff: NaiveDate) -> OccurrenceConfig {
        OccurrenceConfig { n_trees: 300, min_node_size: 5, mtry: None, pi_level: 0.9, cutoff, seed }
    }

    fn forest(&self, sub: &str) -> ForestConfig {
        let mut cfg = ForestConfig::regression(derive_seed_u64(self.seed, &["occurrence", sub]))
            .with_trees(self.n_trees)
            .with_min_node_size(self.min_node_size);
        if let Some(m) = self.mtry {
            cfg = cfg.with_mtry(m);
        }
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct ArmForecast {
    pub forest: Arc<Forest>,
    pub predictions: Vec<f64>,
    pub intervals: Vec<PredictionInterval>,
    pub report: RegressionReport,
}

#[derive(Debug, Clone)]
pub struct OccurrenceOutcome {
    pub dates: Vec<NaiveDate>,
    pub truth: Vec<f64>,
    pub naive: ArmForecast,
    pub hier: ArmForecast,
    pub n_train: usize,
}

fn fit_arm(
    train: &Dataset,
    test: &Dataset,
    features: &[String],
    cfg: &ForestConfig,
    pi_level: f64,
) -> Result<ArmForecast> {
    let mut cols: Vec<&str> = features.iter().map(|s| s.as_str()).collect();
    cols.push("count");
    let train_view = train.select(&cols)?.set_response("count")?;
    let forest = Arc::new(fit(&train_view, cfg)?);
    let index = QuantileIndex::new(Arc::clone(&forest), &train_view)?;
    let rows = forest.encode_dataset(test)?;
    let mut predictions = Vec::with_capacity(rows.len());
    let mut intervals = Vec::with_capacity(rows.len());
    for row in &rows {
        predictions.push(forest.predict_mean(row)?);
        intervals.push(index.interval(row, pi_level)?);
    }
    let truth = test.numeric("count")?;
    let report = regression_report(&predictions, truth, Some(&intervals));
    Ok(ArmForecast { forest, predictions, intervals, report })
}

/// One-step-ahead count model over the panel, both arms on the same
/// temporal split.
pub fn run_occurrence(panel: &DailyPanel, cfg: &OccurrenceConfig) -> Result<OccurrenceOutcome> {
    if panel.data.n() < 2 {
        return Err(Error::EmptyDataset(format!(
            "panel has {} day(s); the lag model needs at least 2",
            panel.data.n()
        )));
    }
    // first day has no lag; keep it out of both periods
    let usable: Vec<usize> = (1..panel.data.n()).collect();
    let panel_data = panel.data.take_rows(&usable)?;
    let (train, test) = panel_data.split(&SplitSpec::Temporal {
        date_column: "date".into(),
        cutoff: cfg.cutoff,
    })?;
    let test_dates = test.dates("date")?.to_vec();

    let naive = fit_arm(&train, &test, &panel.feature_names(true), &cfg.forest("naive"), cfg.pi_level)?;
    let hier = fit_arm(&train, &test, &panel.feature_names(false), &cfg.forest("hier"), cfg.pi_level)?;
    Ok(OccurrenceOutcome {
        dates: test_dates,
        truth: test.numeric("count")?.to_vec(),
        naive,
        hier,
        n_train: train.n(),
    })
}
