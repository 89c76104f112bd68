//! Field-interview workflow: record ingestion, free-text consolidation,
//! the two-layer incident-reason model with race as the latent class, and
//! daily-occurrence forecasting.
//!
//! The raw record schema keeps the street string for provenance, but
//! street never enters model features by default: its cardinality is
//! close to the row count, and district plus city already carry the
//! location signal.

pub mod panel;
pub mod synth;

pub use panel::{build_daily_panel, run_occurrence, ArmForecast, DailyPanel, OccurrenceConfig, OccurrenceOutcome};
pub use synth::{generate, SynthSpec};

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;

use crate::cluster::{ClusterModel, ClusterOptions};
use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestConfig};
use crate::hier::{fit_hier, fit_naive, BottomFeed, HierarchicalModel, HierarchicalSpec};
use crate::metrics::{confusion, ConfusionMatrix};
use crate::rng::derive_seed_u64;

/// One stop-and-interrogate record, as ingested from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct InterviewRecord {
    pub sex: String,
    pub street: String,
    pub district: String,
    pub city: String,
    pub date: NaiveDate,
    pub priors: f64,
    pub race: String,
    pub skin_complexion: String,
    pub clothing: String,
    pub incident_reason: String,
}

pub const RECORD_COLUMNS: [&str; 10] = [
    "sex",
    "street",
    "district",
    "city",
    "date",
    "priors",
    "race",
    "skin_complexion",
    "clothing",
    "incident_reason",
];

pub fn load_records(path: &Path) -> Result<Vec<InterviewRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let headers = reader.headers().map_err(|e| Error::schema(e.to_string()))?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != RECORD_COLUMNS {
        return Err(Error::schema(format!(
            "record header mismatch: got {got:?}, want {RECORD_COLUMNS:?}"
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("").to_string();
        let date = NaiveDate::parse_from_str(rec.get(4).unwrap_or(""), "%Y-%m-%d")
            .map_err(|e| Error::parse(row, format!("date: {e}")))?;
        let priors: f64 = rec
            .get(5)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::parse(row, format!("priors: {e}")))?;
        out.push(InterviewRecord {
            sex: field(0),
            street: field(1),
            district: field(2),
            city: field(3),
            date,
            priors,
            race: field(6),
            skin_complexion: field(7),
            clothing: field(8),
            incident_reason: field(9),
        });
    }
    Ok(out)
}

pub fn records_to_dataset(records: &[InterviewRecord]) -> Result<Dataset> {
    let s = |f: fn(&InterviewRecord) -> &str| -> Column {
        Column::categorical_from_strings(&records.iter().map(f).collect::<Vec<_>>())
    };
    Dataset::from_columns(
        vec![
            ("sex".into(), s(|r| &r.sex)),
            ("street".into(), s(|r| &r.street)),
            ("district".into(), s(|r| &r.district)),
            ("city".into(), s(|r| &r.city)),
            ("date".into(), Column::Date(records.iter().map(|r| r.date).collect())),
            ("priors".into(), Column::Numeric(records.iter().map(|r| r.priors).collect())),
            ("race".into(), s(|r| &r.race)),
            ("skin_complexion".into(), s(|r| &r.skin_complexion)),
            ("clothing".into(), s(|r| &r.clothing)),
            ("incident_reason".into(), s(|r| &r.incident_reason)),
        ],
        None,
    )
}

pub fn save_records(records: &[InterviewRecord], path: &Path) -> Result<()> {
    records_to_dataset(records)?.to_csv(path)
}

/// Categorical column with levels fixed in sorted order, independent of
/// row order.
fn categorical_sorted(values: &[&str]) -> Column {
    let levels: Vec<String> = values.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>().into_iter().collect();
    let codes = values
        .iter()
        .map(|v| levels.iter().position(|l| l == v).expect("level present") as u32)
        .collect();
    Column::Categorical { levels, codes }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub reason_k: usize,
    pub clothing_k: usize,
}

impl Default for PipelineOptions {
    fn default() -> PipelineOptions {
        PipelineOptions { reason_k: 6, clothing_k: 10 }
    }
}

#[derive(Debug)]
pub struct Preprocessed {
    /// Modeling table: sex, district, city, date, priors, race,
    /// skin_complexion, clothing_cluster, reason_cluster, q2, q3, q4.
    pub data: Dataset,
    pub reason_clusters: ClusterModel,
    pub clothing_clusters: ClusterModel,
    /// 1-based reason cluster id per input record.
    pub reason_cluster_ids: Vec<usize>,
}

fn cluster_column(
    values: &[&str],
    k: usize,
    prefix: &str,
    width: usize,
) -> Result<(ClusterModel, Vec<usize>, Column)> {
    let distinct: Vec<String> = values.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.is_empty() {
        return Err(Error::Cluster("no labels to cluster".into()));
    }
    // tiny corpora cannot support the full configured k
    let k = k.min(distinct.len());
    let options = ClusterOptions { k: Some(k), ..ClusterOptions::default() };
    let model = ClusterModel::fit(&distinct, &options)?;
    let id_of: Vec<(String, usize)> = distinct
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), model.assignment[i]))
        .collect();
    let ids: Vec<usize> = values
        .iter()
        .map(|v| id_of.iter().find(|(l, _)| l == v).expect("label present").1)
        .collect();
    let levels: Vec<String> = (1..=k).map(|c| format!("{prefix}{c:0width$}")).collect();
    let codes: Vec<u32> = ids.iter().map(|&c| (c - 1) as u32).collect();
    Ok((model, ids, Column::Categorical { levels, codes }))
}

/// Consolidates free text, attaches quarter indicators, and drops the
/// street column from the modeling table.
pub fn preprocess(records: &[InterviewRecord], opts: &PipelineOptions) -> Result<Preprocessed> {
    if records.is_empty() {
        return Err(Error::EmptyDataset("no interview records".into()));
    }
    let reasons: Vec<&str> = records.iter().map(|r| r.incident_reason.as_str()).collect();
    let clothing: Vec<&str> = records.iter().map(|r| r.clothing.as_str()).collect();
    let (reason_clusters, reason_cluster_ids, reason_col) =
        cluster_column(&reasons, opts.reason_k, "r", 1)?;
    let (clothing_clusters, _, clothing_col) =
        cluster_column(&clothing, opts.clothing_k, "c", 2)?;

    let strs = |f: fn(&InterviewRecord) -> &str| -> Vec<&str> { records.iter().map(f).collect() };
    let data = Dataset::from_columns(
        vec![
            ("sex".into(), categorical_sorted(&strs(|r| &r.sex))),
            ("district".into(), categorical_sorted(&strs(|r| &r.district))),
            ("city".into(), categorical_sorted(&strs(|r| &r.city))),
            ("date".into(), Column::Date(records.iter().map(|r| r.date).collect())),
            ("priors".into(), Column::Numeric(records.iter().map(|r| r.priors).collect())),
            ("race".into(), categorical_sorted(&strs(|r| &r.race))),
            ("skin_complexion".into(), categorical_sorted(&strs(|r| &r.skin_complexion))),
            ("clothing_cluster".into(), clothing_col),
            ("reason_cluster".into(), reason_col),
        ],
        None,
    )?
    .quarter_dummies("date")?;
    Ok(Preprocessed { data, reason_clusters, clothing_clusters, reason_cluster_ids })
}

pub const DEFAULT_RACE_PROXIES: [&str; 4] = ["district", "city", "skin_complexion", "clothing_cluster"];

#[derive(Debug, Clone)]
pub struct ReasonConfig {
    /// Bottom-layer features for the latent race class.
    pub proxies: Vec<String>,
    pub train_fraction: f64,
    pub n_trees: usize,
    pub min_node_size: usize,
    pub mtry: Option<usize>,
    pub feed: BottomFeed,
    pub seed: u64,
}

impl ReasonConfig {
    pub fn new(seed: u64) -> ReasonConfig {
        ReasonConfig {
            proxies: DEFAULT_RACE_PROXIES.iter().map(|s| s.to_string()).collect(),
            train_fraction: 0.75,
            n_trees: 150,
            min_node_size: 25,
            mtry: None,
            feed: BottomFeed::OutOfBag,
            seed,
        }
    }

    fn forest(&self, sub: &str) -> ForestConfig {
        let mut cfg = ForestConfig::classification(derive_seed_u64(self.seed, &["reason", sub]))
            .with_trees(self.n_trees)
            .with_min_node_size(self.min_node_size);
        if let Some(m) = self.mtry {
            cfg = cfg.with_mtry(m);
        }
        cfg
    }
}

#[derive(Debug)]
pub struct ReasonOutcome {
    pub hier: HierarchicalModel,
    pub naive: Forest,
    pub hier_confusion: ConfusionMatrix,
    pub naive_confusion: ConfusionMatrix,
    pub hier_accuracy: f64,
    pub naive_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Fits both arms of the incident-reason model on one shared split and
/// evaluates them on the same held-out rows.
pub fn run_reason(data: &Dataset, cfg: &ReasonConfig) -> Result<ReasonOutcome> {
    if cfg.proxies.is_empty() {
        return Err(Error::config("reason model needs at least one race proxy"));
    }
    let top_covariates: Vec<String> = data
        .names()
        .iter()
        .filter(|n| !matches!(n.as_str(), "race" | "reason_cluster" | "date"))
        .cloned()
        .collect();
    let (train, test) = data.split(&crate::dataset::SplitSpec::Random {
        fraction: cfg.train_fraction,
        seed: derive_seed_u64(cfg.seed, &["reason", "split"]),
    })?;

    let spec = HierarchicalSpec {
        proxies: cfg.proxies.clone(),
        protected: "race".into(),
        outcome: "reason_cluster".into(),
        top_covariates: top_covariates.clone(),
        bottom: cfg.forest("bottom"),
        top: cfg.forest("top"),
        feed: cfg.feed,
    };
    let hier = fit_hier(&train, &spec)?;

    let mut naive_cov: Vec<&str> = top_covariates.iter().map(|s| s.as_str()).collect();
    naive_cov.push("race");
    let naive = fit_naive(&train, "reason_cluster", &naive_cov, &cfg.forest("naive"))?;

    let actual: Vec<u32> = {
        let (_, codes) = test.categorical("reason_cluster")?;
        codes.to_vec()
    };
    let levels = test.categorical("reason_cluster")?.0.to_vec();
    let hier_pred = hier.predict_class(&test)?;
    let naive_pred = naive.predict_class_batch(&test)?;
    let hier_confusion = confusion(&levels, &hier_pred, &actual)?;
    let naive_confusion = confusion(&levels, &naive_pred, &actual)?;
    Ok(ReasonOutcome {
        hier_accuracy: hier_confusion.accuracy(),
        naive_accuracy: naive_confusion.accuracy(),
        hier,
        naive,
        hier_confusion,
        naive_confusion,
        n_train: train.n(),
        n_test: test.n(),
    })
}

/// Proxy-only race classifier trained on rows dated strictly before the
/// cutoff, predicting a level string for every row. Feeds the forecast
/// arm that must not see observed race, so the held-out period never
/// contributes to its own predictor.
pub fn predict_race_from_proxies(
    data: &Dataset,
    proxies: &[String],
    cutoff: NaiveDate,
    cfg: &ForestConfig,
) -> Result<Vec<String>> {
    if proxies.is_empty() {
        return Err(Error::config("race predictor needs at least one proxy column"));
    }
    let (train, _) = data.split(&crate::dataset::SplitSpec::Temporal {
        date_column: "date".into(),
        cutoff,
    })?;
    let mut cols: Vec<&str> = proxies.iter().map(|s| s.as_str()).collect();
    cols.push("race");
    let view = train.select(&cols)?.set_response("race")?;
    let forest = crate::forest::fit(&view, cfg)?;
    let codes = forest.predict_class_batch(data)?;
    let levels = match &forest.response.kind {
        crate::forest::FeatureKind::Categorical { levels } => levels.clone(),
        _ => return Err(Error::schema("race response is not categorical")),
    };
    Ok(codes.into_iter().map(|c| levels[c as usize].clone()).collect())
}
