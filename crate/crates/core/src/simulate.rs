//! Monte Carlo comparison harness: three data-generating scenarios, a
//! B-replication driver fitting the latent-class model against a naive
//! forest under shared seeds, and table/plot-ready result assembly.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, Task};
use crate::hier::{self, BottomFeed, HierarchicalSpec};
use crate::metrics::{self, ConfusionMatrix, RegressionReport};
use crate::quantile::{PredictionInterval, QuantileIndex};
use crate::rng::{derive_rng, derive_seed_u64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::sync::Arc;

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    Linear,
    Nonlinear,
    Classification,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Linear => "linear",
            Scenario::Nonlinear => "nonlinear",
            Scenario::Classification => "classification",
        }
    }

    pub fn parse(s: &str) -> Result<Scenario> {
        match s {
            "linear" => Ok(Scenario::Linear),
            "nonlinear" => Ok(Scenario::Nonlinear),
            "classification" => Ok(Scenario::Classification),
            other => Err(Error::config(format!(
                "unknown scenario {other:?} (want linear, nonlinear, or classification)"
            ))),
        }
    }
}

/// Study size and noise knobs. The generating noise level is a free knob
/// (not part of any published table), so absolute error magnitudes depend
/// on it; arm-to-arm comparisons do not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub b: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        ScenarioSpec { scenario, n: 500, b: 100, noise_sd: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::config(format!("n must be at least 10, got {}", self.n)));
        }
        if self.b < 1 {
            return Err(Error::config("b must be at least 1"));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::config(format!("noise_sd must be positive, got {}", self.noise_sd)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Real(Vec<f64>),
    Binary(Vec<bool>),
}

/// One simulated draw. x₁,x₂ ~ U(0,1) and x₃ = 0.4x₁ + 0.4x₂ + 0.2u is the
/// proxied protected variable; μ is kept for the classification scenario.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
    pub y: Outcome,
    pub mu: Option<Vec<f64>>,
}

impl SimulatedData {
    /// Columns x1, x2, x3, y with y as the response. A binary outcome
    /// becomes a categorical column with levels (N, P), N first.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let y_col = match &self.y {
            Outcome::Real(v) => Column::Numeric(v.clone()),
            Outcome::Binary(v) => Column::Categorical {
                levels: vec!["N".into(), "P".into()],
                codes: v.iter().map(|&b| if b { 1 } else { 0 }).collect(),
            },
        };
        Dataset::from_columns(
            vec![
                ("x1".into(), Column::Numeric(self.x1.clone())),
                ("x2".into(), Column::Numeric(self.x2.clone())),
                ("x3".into(), Column::Numeric(self.x3.clone())),
                ("y".into(), y_col),
            ],
            Some("y"),
        )
    }
}

fn draw(spec: &ScenarioSpec, replicate: usize, side: &str) -> SimulatedData {
    let rep = replicate.to_string();
    let mut rng = derive_rng(spec.seed, &["rep", &rep, side]);
    let n = spec.n;
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let x3: Vec<f64> = (0..n)
        .map(|i| 0.4 * x1[i] + 0.4 * x2[i] + 0.2 * rng.random_range(0.0..1.0))
        .collect();
    match spec.scenario {
        Scenario::Linear => {
            let y = (0..n)
                .map(|i| {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    3.0 * x1[i] + 3.0 * x2[i] + 2.0 * x3[i] + spec.noise_sd * eps
                })
                .collect();
            SimulatedData { x1, x2, x3, y: Outcome::Real(y), mu: None }
        }
        Scenario::Nonlinear => {
            let y = (0..n)
                .map(|i| {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    let pos = (x2[i] - 0.25).max(0.0);
                    100.0 * (x1[i] - 0.5).powi(2) * pos + x3[i].cos() + spec.noise_sd * eps
                })
                .collect();
            SimulatedData { x1, x2, x3, y: Outcome::Real(y), mu: None }
        }
        Scenario::Classification => {
            let mu: Vec<f64> = (0..n)
                .map(|i| normal_cdf(10.0 * (x1[i] - 1.0) + 10.0 * (x2[i] - 0.5).abs() + 10.0 * x3[i]))
                .collect();
            let y = (0..n)
                .map(|i| rng.random_range(0.0..1.0) < mu[i])
                .collect();
            SimulatedData { x1, x2, x3, y: Outcome::Binary(y), mu: Some(mu) }
        }
    }
}

/// Independent train and test draws for one replicate, from streams keyed
/// by the replicate index.
pub fn generate(spec: &ScenarioSpec, replicate: usize) -> Result<(SimulatedData, SimulatedData)> {
    spec.validate()?;
    if replicate >= spec.b {
        return Err(Error::config(format!(
            "replicate {replicate} out of range (b = {})",
            spec.b
        )));
    }
    Ok((draw(spec, replicate, "train"), draw(spec, replicate, "test")))
}

/// Forest sizes used by the study (shared by both arms and both layers).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyForestConfig {
    pub n_trees: usize,
    pub min_node_size_regression: usize,
    pub min_node_size_classification: usize,
    pub mtry: Option<usize>,
}

impl Default for StudyForestConfig {
    fn default() -> Self {
        StudyForestConfig {
            n_trees: 500,
            min_node_size_regression: 5,
            min_node_size_classification: 1,
            mtry: None,
        }
    }
}

impl StudyForestConfig {
    /// Regression forests scan every feature per split unless overridden;
    /// at p=3 a √p draw would pick a single feature and force splits onto
    /// the proxied column's noise, which no reference table reflects.
    fn regression(&self, seed: u64, p: usize) -> ForestConfig {
        let mut cfg = ForestConfig::regression(seed)
            .with_trees(self.n_trees)
            .with_min_node_size(self.min_node_size_regression);
        cfg.mtry = self.mtry.or(Some(p));
        cfg
    }

    fn classification(&self, seed: u64) -> ForestConfig {
        let mut cfg = ForestConfig::classification(seed)
            .with_trees(self.n_trees)
            .with_min_node_size(self.min_node_size_classification);
        cfg.mtry = self.mtry;
        cfg
    }
}

/// Per-point plot record from replicate 0's test draw, sorted by x1.
#[derive(Debug, Clone, Serialize)]
pub struct PlotPoint {
    pub x1: f64,
    pub observed: f64,
    pub naive_pred: f64,
    pub naive_lo: f64,
    pub naive_hi: f64,
    pub hier_pred: f64,
    pub hier_lo: f64,
    pub hier_hi: f64,
}

#[derive(Debug, Clone)]
pub struct RegressionStudy {
    pub naive: RegressionReport,
    pub hier: RegressionReport,
    pub plot: Vec<PlotPoint>,
    /// (actual x₃, predicted x₃) pairs from replicate 0 (bottom layer view)
    pub protected_plot: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ClassificationStudy {
    /// replicate-averaged percentage matrices
    pub naive: ConfusionMatrix,
    pub hier: ConfusionMatrix,
    pub naive_accuracy: f64,
    pub hier_accuracy: f64,
    pub protected_plot: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub spec: ScenarioSpec,
    pub regression: Option<RegressionStudy>,
    pub classification: Option<ClassificationStudy>,
}

fn hier_spec(task: Task, fc: &StudyForestConfig, bottom_seed: u64, top_seed: u64) -> HierarchicalSpec {
    HierarchicalSpec {
        proxies: vec!["x1".into(), "x2".into()],
        protected: "x3".into(),
        outcome: "y".into(),
        top_covariates: vec!["x1".into(), "x2".into()],
        // bottom sees the two proxies; the top sees them plus the feed
        bottom: fc.regression(bottom_seed, 2),
        top: match task {
            Task::Regression => fc.regression(top_seed, 3),
            Task::Classification => fc.classification(top_seed),
        },
        feed: BottomFeed::OutOfBag,
    }
}

/// Run the full B-replication comparison for one scenario. Both arms see
/// identical train/test draws in every replicate; the with-proxy arm never
/// sees raw x₃, the naive arm takes it directly.
pub fn run_study(spec: &ScenarioSpec, fc: &StudyForestConfig) -> Result<StudyResult> {
    spec.validate()?;
    match spec.scenario {
        Scenario::Linear | Scenario::Nonlinear => run_regression_study(spec, fc),
        Scenario::Classification => run_classification_study(spec, fc),
    }
}

fn run_regression_study(spec: &ScenarioSpec, fc: &StudyForestConfig) -> Result<StudyResult> {
    let mut naive_reports = Vec::with_capacity(spec.b);
    let mut hier_reports = Vec::with_capacity(spec.b);
    let mut plot: Vec<PlotPoint> = Vec::new();
    let mut protected_plot: Vec<(f64, f64)> = Vec::new();

    for r in 0..spec.b {
        let rep = r.to_string();
        let (train, test) = generate(spec, r)?;
        let train_ds = train.to_dataset()?;
        let test_ds = test.to_dataset()?;
        let y_test = match &test.y {
            Outcome::Real(v) => v.clone(),
            Outcome::Binary(_) => unreachable!("regression scenario"),
        };

        let naive_cfg = fc.regression(derive_seed_u64(spec.seed, &["rep", &rep, "naive"]), 3);
        let naive = hier::fit_naive(&train_ds, "y", &["x1", "x2", "x3"], &naive_cfg)?;
        let naive = Arc::new(naive);
        let naive_pred = naive.predict_mean_batch(&test_ds)?;
        let naive_qi = QuantileIndex::new(naive.clone(), &train_ds)?;
        let naive_rows = naive.encode_dataset(&test_ds)?;
        let naive_pis: Vec<PredictionInterval> = naive_rows
            .iter()
            .map(|row| naive_qi.interval(row, 0.9))
            .collect::<Result<_>>()?;
        naive_reports.push(metrics::regression_report(&naive_pred, &y_test, Some(&naive_pis)));

        let hspec = hier_spec(
            Task::Regression,
            fc,
            derive_seed_u64(spec.seed, &["rep", &rep, "hier", "bottom"]),
            derive_seed_u64(spec.seed, &["rep", &rep, "hier", "top"]),
        );
        let model = hier::fit_hier(&train_ds, &hspec)?;
        let hier_pred = model.predict_mean(&test_ds)?;
        let top = Arc::new(model.top.clone());
        let hier_qi = QuantileIndex::from_training(top.clone(), train_ds.numeric("y")?.to_vec())?;
        let augmented = model.augment(&test_ds)?;
        let hier_rows = top.encode_dataset(&augmented)?;
        let hier_pis: Vec<PredictionInterval> = hier_rows
            .iter()
            .map(|row| hier_qi.interval(row, 0.9))
            .collect::<Result<_>>()?;
        hier_reports.push(metrics::regression_report(&hier_pred, &y_test, Some(&hier_pis)));

        if r == 0 {
            let mut order: Vec<usize> = (0..spec.n).collect();
            order.sort_by(|&a, &b| test.x1[a].partial_cmp(&test.x1[b]).unwrap());
            plot = order
                .iter()
                .map(|&i| PlotPoint {
                    x1: test.x1[i],
                    observed: y_test[i],
                    naive_pred: naive_pred[i],
                    naive_lo: naive_pis[i].lower,
                    naive_hi: naive_pis[i].upper,
                    hier_pred: hier_pred[i],
                    hier_lo: hier_pis[i].lower,
                    hier_hi: hier_pis[i].upper,
                })
                .collect();
            let x3_hat = match model.predict_protected(&test_ds)? {
                Column::Numeric(v) => v,
                _ => unreachable!("regression bottom layer"),
            };
            protected_plot = test.x3.iter().copied().zip(x3_hat).collect();
        }
    }

    Ok(StudyResult {
        spec: spec.clone(),
        regression: Some(RegressionStudy {
            naive: metrics::replicate_average(&naive_reports),
            hier: metrics::replicate_average(&hier_reports),
            plot,
            protected_plot,
        }),
        classification: None,
    })
}

fn run_classification_study(spec: &ScenarioSpec, fc: &StudyForestConfig) -> Result<StudyResult> {
    let mut naive_mats = Vec::with_capacity(spec.b);
    let mut hier_mats = Vec::with_capacity(spec.b);
    let mut protected_plot: Vec<(f64, f64)> = Vec::new();

    for r in 0..spec.b {
        let rep = r.to_string();
        let (train, test) = generate(spec, r)?;
        let train_ds = train.to_dataset()?;
        let test_ds = test.to_dataset()?;
        let (levels, actual) = test_ds.categorical("y")?;
        let levels = levels.to_vec();
        let actual = actual.to_vec();

        let naive_cfg = fc.classification(derive_seed_u64(spec.seed, &["rep", &rep, "naive"]));
        let naive = hier::fit_naive(&train_ds, "y", &["x1", "x2", "x3"], &naive_cfg)?;
        let naive_pred = naive.predict_class_batch(&test_ds)?;
        naive_mats.push(metrics::confusion(&levels, &naive_pred, &actual)?);

        let hspec = hier_spec(
            Task::Classification,
            fc,
            derive_seed_u64(spec.seed, &["rep", &rep, "hier", "bottom"]),
            derive_seed_u64(spec.seed, &["rep", &rep, "hier", "top"]),
        );
        let model = hier::fit_hier(&train_ds, &hspec)?;
        let hier_pred = model.predict_class(&test_ds)?;
        hier_mats.push(metrics::confusion(&levels, &hier_pred, &actual)?);

        if r == 0 {
            let x3_hat = match model.predict_protected(&test_ds)? {
                Column::Numeric(v) => v,
                _ => unreachable!("regression bottom layer"),
            };
            protected_plot = test.x3.iter().copied().zip(x3_hat).collect();
        }
    }

    let naive_avg = metrics::average_confusion_percent(&naive_mats)?;
    let hier_avg = metrics::average_confusion_percent(&hier_mats)?;
    let naive_accuracy =
        naive_mats.iter().map(|m| m.accuracy()).sum::<f64>() / naive_mats.len() as f64;
    let hier_accuracy =
        hier_mats.iter().map(|m| m.accuracy()).sum::<f64>() / hier_mats.len() as f64;
    Ok(StudyResult {
        spec: spec.clone(),
        regression: None,
        classification: Some(ClassificationStudy {
            naive: naive_avg,
            hier: hier_avg,
            naive_accuracy,
            hier_accuracy,
            protected_plot,
        }),
    })
}

/// Render the study's summary table as CSV, one row per arm.
///
/// Regression columns: bias, the tables' literal sd formula, conventional
/// sd, mse, and mean 90% interval coverage. Classification columns: the
/// column-normalized confusion cells averaged over replicates plus mean
/// accuracy.
pub fn table_csv(result: &StudyResult) -> String {
    let mut out = String::new();
    if let Some(reg) = &result.regression {
        let _ = writeln!(out, "scenario,arm,bias,sd_paper,sd_conventional,mse,pi_coverage_90");
        for (arm, rep) in [("with_proxy", &reg.hier), ("without_proxy", &reg.naive)] {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                result.spec.scenario.name(),
                arm,
                rep.bias,
                rep.sd,
                rep.sd_conventional,
                rep.mse,
                rep.pi_coverage.map(|c| c.to_string()).unwrap_or_default()
            );
        }
    }
    if let Some(cls) = &result.classification {
        let levels = &cls.naive.levels;
        let mut header = String::from("scenario,arm,accuracy");
        for a in levels {
            for p in levels {
                let _ = write!(header, ",pred_{p}_actual_{a}_pct");
            }
        }
        let _ = writeln!(out, "{header}");
        for (arm, mat, acc) in [
            ("with_proxy", &cls.hier, cls.hier_accuracy),
            ("without_proxy", &cls.naive, cls.naive_accuracy),
        ] {
            let mut row = format!("{},{},{}", result.spec.scenario.name(), arm, acc);
            for a in 0..levels.len() {
                for p in 0..levels.len() {
                    let _ = write!(row, ",{}", mat.percent[p][a]);
                }
            }
            let _ = writeln!(out, "{row}");
        }
    }
    out
}
