//! Python bindings: dataset assembly, forests, quantile intervals, the
//! two-layer model, label clustering, the simulation studies, and the
//! interview-pipeline entry points. Everything is a thin wrapper over the
//! core crate; all randomness stays seed-driven.

use std::path::PathBuf;
use std::sync::Arc;

use chrono::NaiveDate;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use proxyforest_core::cluster::{
    jaro_winkler as jw, soundex as sx, soundex_phrase as sx_phrase, ClusterModel, ClusterOptions,
    DistanceMode, Linkage,
};
use proxyforest_core::dataset::{Column, Dataset};
use proxyforest_core::forest::{self, FeatureKind, Forest, ForestConfig};
use proxyforest_core::hier::{self, BottomFeed, HierarchicalModel, HierarchicalSpec};
use proxyforest_core::pipeline::{
    self, build_daily_panel, predict_race_from_proxies, preprocess, run_occurrence, run_reason,
    synth, OccurrenceConfig, PipelineOptions, ReasonConfig, DEFAULT_RACE_PROXIES,
};
use proxyforest_core::quantile::QuantileIndex;
use proxyforest_core::rng::derive_seed_u64;
use proxyforest_core::simulate;

fn err(e: proxyforest_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_date(s: &str, what: &str) -> PyResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn parse_feed(s: &str) -> PyResult<BottomFeed> {
    match s {
        "oob" | "out_of_bag" => Ok(BottomFeed::OutOfBag),
        "in_sample" => Ok(BottomFeed::InSample),
        other => Err(PyValueError::new_err(format!(
            "feed must be \"oob\" or \"in_sample\", got {other:?}"
        ))),
    }
}

/// Columns in insertion order; values listed in `dates` parse as
/// YYYY-MM-DD, float lists become numeric columns, string lists become
/// categorical columns.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (columns, response=None, dates=None))]
    fn new(
        columns: &Bound<'_, PyDict>,
        response: Option<&str>,
        dates: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let date_names = dates.unwrap_or_default();
        let mut cols: Vec<(String, Column)> = Vec::new();
        for (key, value) in columns.iter() {
            let name: String = key.extract()?;
            let col = if date_names.iter().any(|d| d == &name) {
                let texts: Vec<String> = value.extract()?;
                let parsed: PyResult<Vec<NaiveDate>> =
                    texts.iter().map(|t| parse_date(t, &name)).collect();
                Column::Date(parsed?)
            } else if let Ok(nums) = value.extract::<Vec<f64>>() {
                Column::Numeric(nums)
            } else {
                let texts: Vec<String> = value.extract().map_err(|_| {
                    PyValueError::new_err(format!(
                        "column {name:?} must be a list of floats or strings"
                    ))
                })?;
                Column::categorical_from_strings(&texts)
            };
            cols.push((name, col));
        }
        Ok(PyDataset { inner: Dataset::from_columns(cols, response).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn response(&self) -> Option<String> {
        self.inner.response_name().map(str::to_string)
    }

    fn select(&self, names: Vec<String>) -> PyResult<PyDataset> {
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ok(PyDataset { inner: self.inner.select(&refs).map_err(err)? })
    }

    fn set_response(&self, name: &str) -> PyResult<PyDataset> {
        Ok(PyDataset { inner: self.inner.set_response(name).map_err(err)? })
    }
}

fn forest_config(
    task: &str,
    seed: u64,
    n_trees: usize,
    min_node_size: Option<usize>,
    mtry: Option<usize>,
    bootstrap: bool,
) -> PyResult<ForestConfig> {
    let mut cfg = match task {
        "regression" => ForestConfig::regression(seed),
        "classification" => ForestConfig::classification(seed),
        other => {
            return Err(PyValueError::new_err(format!(
                "task must be \"regression\" or \"classification\", got {other:?}"
            )))
        }
    };
    cfg.n_trees = n_trees;
    if let Some(m) = min_node_size {
        cfg.min_node_size = m;
    }
    cfg.mtry = mtry;
    cfg.bootstrap = bootstrap;
    Ok(cfg)
}

fn class_levels(schema: &forest::FeatureSchema) -> PyResult<Vec<String>> {
    match &schema.kind {
        FeatureKind::Categorical { levels } => Ok(levels.clone()),
        FeatureKind::Numeric => {
            Err(PyValueError::new_err("response is numeric; use predict_mean"))
        }
    }
}

/// A fitted random forest. Training happens in the constructor.
#[pyclass(name = "Forest", frozen)]
struct PyForest {
    inner: Arc<Forest>,
}

#[pymethods]
impl PyForest {
    #[new]
    #[pyo3(signature = (data, task="regression", seed=0, n_trees=500, min_node_size=None, mtry=None, bootstrap=true))]
    fn new(
        data: &PyDataset,
        task: &str,
        seed: u64,
        n_trees: usize,
        min_node_size: Option<usize>,
        mtry: Option<usize>,
        bootstrap: bool,
    ) -> PyResult<Self> {
        let cfg = forest_config(task, seed, n_trees, min_node_size, mtry, bootstrap)?;
        Ok(PyForest { inner: Arc::new(forest::fit(&data.inner, &cfg).map_err(err)?) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyForest { inner: Arc::new(Forest::from_json(text).map_err(err)?) })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn n_trees(&self) -> usize {
        self.inner.trees.len()
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.features.iter().map(|f| f.name.clone()).collect()
    }

    fn predict_mean(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        self.inner.predict_mean_batch(&data.inner).map_err(err)
    }

    fn predict_class(&self, data: &PyDataset) -> PyResult<Vec<String>> {
        let levels = class_levels(&self.inner.response)?;
        let codes = self.inner.predict_class_batch(&data.inner).map_err(err)?;
        Ok(codes.into_iter().map(|c| levels[c as usize].clone()).collect())
    }

    /// Split-node counts per feature name, zeros included.
    fn split_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for (name, count) in self.inner.split_counts() {
            out.set_item(name, count)?;
        }
        Ok(out)
    }
}

/// Weighted-CDF quantiles and prediction intervals from a fitted forest
/// and its training data.
#[pyclass(name = "QuantileIndex", frozen)]
struct PyQuantileIndex {
    inner: QuantileIndex,
}

#[pymethods]
impl PyQuantileIndex {
    #[new]
    fn new(forest: &PyForest, train: &PyDataset) -> PyResult<Self> {
        Ok(PyQuantileIndex {
            inner: QuantileIndex::new(Arc::clone(&forest.inner), &train.inner).map_err(err)?,
        })
    }

    fn quantiles(&self, data: &PyDataset, qs: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let rows = self.inner.forest().encode_dataset(&data.inner).map_err(err)?;
        rows.iter().map(|row| self.inner.quantiles(row, &qs).map_err(err)).collect()
    }

    /// (lower, upper) pairs at the given central coverage level.
    fn intervals(&self, data: &PyDataset, level: f64) -> PyResult<Vec<(f64, f64)>> {
        let rows = self.inner.forest().encode_dataset(&data.inner).map_err(err)?;
        rows.iter()
            .map(|row| {
                let iv = self.inner.interval(row, level).map_err(err)?;
                Ok((iv.lower, iv.upper))
            })
            .collect()
    }
}

/// Bottom layer predicts the protected column from proxies; the top layer
/// consumes that prediction instead of the raw column.
#[pyclass(name = "HierarchicalModel", frozen)]
struct PyHierarchicalModel {
    inner: HierarchicalModel,
}

#[pymethods]
impl PyHierarchicalModel {
    #[new]
    #[pyo3(signature = (
        data, proxies, protected, outcome, covariates, seed=0, task="regression",
        n_trees=500, min_node_size=None, mtry=None, feed="oob"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        data: &PyDataset,
        proxies: Vec<String>,
        protected: String,
        outcome: String,
        covariates: Vec<String>,
        seed: u64,
        task: &str,
        n_trees: usize,
        min_node_size: Option<usize>,
        mtry: Option<usize>,
        feed: &str,
    ) -> PyResult<Self> {
        let bottom_seed = derive_seed_u64(seed, &["bottom"]);
        let top_seed = derive_seed_u64(seed, &["top"]);
        let spec = HierarchicalSpec {
            proxies,
            protected,
            outcome,
            top_covariates: covariates,
            bottom: forest_config("regression", bottom_seed, n_trees, min_node_size, mtry, true)?,
            top: forest_config(task, top_seed, n_trees, min_node_size, mtry, true)?,
            feed: parse_feed(feed)?,
        };
        Ok(PyHierarchicalModel { inner: hier::fit_hier(&data.inner, &spec).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyHierarchicalModel { inner: HierarchicalModel::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn predict_mean(&self, data: &PyDataset) -> PyResult<Vec<f64>> {
        self.inner.predict_mean(&data.inner).map_err(err)
    }

    fn predict_class(&self, data: &PyDataset) -> PyResult<Vec<String>> {
        let levels = class_levels(&self.inner.top.response)?;
        let codes = self.inner.predict_class(&data.inner).map_err(err)?;
        Ok(codes.into_iter().map(|c| levels[c as usize].clone()).collect())
    }

    /// Bottom-layer prediction of the protected column (floats, or level
    /// strings when the protected column is categorical).
    fn predict_protected(&self, py: Python<'_>, data: &PyDataset) -> PyResult<Py<PyAny>> {
        match self.inner.predict_protected(&data.inner).map_err(err)? {
            Column::Numeric(v) => Ok(v.into_pyobject(py)?.into_any().unbind()),
            Column::Categorical { levels, codes } => {
                let names: Vec<String> =
                    codes.iter().map(|&c| levels[c as usize].clone()).collect();
                Ok(names.into_pyobject(py)?.into_any().unbind())
            }
            Column::Date(_) => Err(PyValueError::new_err("protected column is a date")),
        }
    }

    /// Split-node count on a named column across both layers; zero for the
    /// raw protected column is the unawareness audit.
    fn splits_on(&self, column: &str) -> usize {
        self.inner.splits_on(column)
    }
}

/// Agglomerative clustering of text labels.
#[pyclass(name = "Clustering", frozen)]
struct PyClustering {
    inner: ClusterModel,
}

#[pymethods]
impl PyClustering {
    #[new]
    #[pyo3(signature = (labels, k=None, mode="soundex-jw", linkage="average", prefix_scale=0.1, k_max=10))]
    fn new(
        labels: Vec<String>,
        k: Option<usize>,
        mode: &str,
        linkage: &str,
        prefix_scale: f64,
        k_max: usize,
    ) -> PyResult<Self> {
        let options = ClusterOptions {
            mode: DistanceMode::parse(mode).map_err(err)?,
            linkage: Linkage::parse(linkage).map_err(err)?,
            prefix_scale,
            k,
            k_max,
        };
        Ok(PyClustering { inner: ClusterModel::fit(&labels, &options).map_err(err)? })
    }

    fn k(&self) -> usize {
        self.inner.k
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels.clone()
    }

    /// 1-based cluster id per training label.
    fn assignment(&self) -> Vec<usize> {
        self.inner.assignment.clone()
    }

    /// Medoid label of each cluster, index c−1.
    fn medoids(&self) -> Vec<String> {
        self.inner
            .medoids
            .iter()
            .map(|&i| self.inner.labels[i as usize].clone())
            .collect()
    }

    /// (a, b, height, size) merge steps.
    fn merges(&self) -> Vec<(usize, usize, f64, usize)> {
        self.inner.merges.iter().map(|m| (m.a, m.b, m.height, m.size)).collect()
    }

    fn elbow_curve(&self) -> Option<Vec<f64>> {
        self.inner.elbow_curve.clone()
    }

    /// Cluster ids for unseen labels (nearest training label's cluster).
    fn assign(&self, labels: Vec<String>) -> Vec<usize> {
        labels.iter().map(|l| self.inner.assign(l)).collect()
    }
}

#[pyfunction]
#[pyo3(signature = (word))]
fn soundex(word: &str) -> (String, bool) {
    let code = sx(word);
    (code.code, code.flagged)
}

#[pyfunction]
fn soundex_phrase(phrase: &str) -> String {
    sx_phrase(phrase)
}

#[pyfunction]
#[pyo3(signature = (a, b, prefix_scale=0.1))]
fn jaro_winkler(a: &str, b: &str, prefix_scale: f64) -> f64 {
    jw(a, b, prefix_scale)
}

fn regression_arm<'py>(
    py: Python<'py>,
    report: &proxyforest_core::metrics::RegressionReport,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("bias", report.bias)?;
    d.set_item("sd_paper", report.sd)?;
    d.set_item("sd_conventional", report.sd_conventional)?;
    d.set_item("mse", report.mse)?;
    d.set_item("pi_coverage_90", report.pi_coverage)?;
    Ok(d)
}

fn classification_arm<'py>(
    py: Python<'py>,
    matrix: &proxyforest_core::metrics::ConfusionMatrix,
    accuracy: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", accuracy)?;
    d.set_item("levels", matrix.levels.clone())?;
    d.set_item("percent", matrix.percent.clone())?;
    Ok(d)
}

/// Both-arm simulation study; returns the per-arm metrics as nested dicts
/// under "with_proxy" / "without_proxy".
#[pyfunction]
#[pyo3(signature = (scenario, seed, n=500, b=100, noise_sd=1.0, n_trees=500, mtry=None))]
fn run_study<'py>(
    py: Python<'py>,
    scenario: &str,
    seed: u64,
    n: usize,
    b: usize,
    noise_sd: f64,
    n_trees: usize,
    mtry: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = simulate::ScenarioSpec::new(simulate::Scenario::parse(scenario).map_err(err)?, seed);
    spec.n = n;
    spec.b = b;
    spec.noise_sd = noise_sd;
    let fc = simulate::StudyForestConfig { n_trees, mtry, ..Default::default() };
    let result = simulate::run_study(&spec, &fc).map_err(err)?;

    let out = PyDict::new(py);
    out.set_item("scenario", spec.scenario.name())?;
    if let Some(study) = &result.regression {
        out.set_item("with_proxy", regression_arm(py, &study.hier)?)?;
        out.set_item("without_proxy", regression_arm(py, &study.naive)?)?;
    }
    if let Some(study) = &result.classification {
        out.set_item("with_proxy", classification_arm(py, &study.hier, study.hier_accuracy)?)?;
        out.set_item("without_proxy", classification_arm(py, &study.naive, study.naive_accuracy)?)?;
    }
    Ok(out)
}

/// Writes a synthetic interview-record CSV; returns the record count.
#[pyfunction]
#[pyo3(signature = (path, seed, n=20_000, years=6, link_strength=0.9, start="2009-01-01"))]
fn synth_records(
    path: PathBuf,
    seed: u64,
    n: usize,
    years: u32,
    link_strength: f64,
    start: &str,
) -> PyResult<usize> {
    let mut spec = synth::SynthSpec::new(seed);
    spec.n = n;
    spec.years = years;
    spec.link_strength = link_strength;
    spec.start = parse_date(start, "start")?;
    let records = synth::generate(&spec).map_err(err)?;
    pipeline::save_records(&records, &path).map_err(err)?;
    Ok(records.len())
}

/// Fits both incident-reason arms on an interview-record CSV.
#[pyfunction]
#[pyo3(signature = (path, seed, n_trees=150, min_node_size=25, train_fraction=0.75, reason_k=6, clothing_k=10))]
fn reason_study<'py>(
    py: Python<'py>,
    path: PathBuf,
    seed: u64,
    n_trees: usize,
    min_node_size: usize,
    train_fraction: f64,
    reason_k: usize,
    clothing_k: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let records = pipeline::load_records(&path).map_err(err)?;
    let pre = preprocess(&records, &PipelineOptions { reason_k, clothing_k }).map_err(err)?;
    let cfg =
        ReasonConfig { n_trees, min_node_size, train_fraction, ..ReasonConfig::new(seed) };
    let outcome = run_reason(&pre.data, &cfg).map_err(err)?;

    let out = PyDict::new(py);
    out.set_item("hier_accuracy", outcome.hier_accuracy)?;
    out.set_item("naive_accuracy", outcome.naive_accuracy)?;
    out.set_item("n_train", outcome.n_train)?;
    out.set_item("n_test", outcome.n_test)?;
    out.set_item("race_split_nodes", outcome.hier.splits_on("race"))?;
    Ok(out)
}

fn forecast_arm<'py>(
    py: Python<'py>,
    arm: &pipeline::ArmForecast,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("predictions", arm.predictions.clone())?;
    d.set_item("lower", arm.intervals.iter().map(|iv| iv.lower).collect::<Vec<_>>())?;
    d.set_item("upper", arm.intervals.iter().map(|iv| iv.upper).collect::<Vec<_>>())?;
    d.set_item("mse", arm.report.mse)?;
    d.set_item("pi_coverage", arm.report.pi_coverage)?;
    Ok(d)
}

/// One-step-ahead daily occurrence forecast, both arms, from an
/// interview-record CSV. Days at/after `cutoff` form the test period.
#[pyfunction]
#[pyo3(signature = (path, cutoff, seed, n_trees=300, min_node_size=5, pi_level=0.9, reason_k=6, clothing_k=10))]
#[allow(clippy::too_many_arguments)]
fn occurrence_study<'py>(
    py: Python<'py>,
    path: PathBuf,
    cutoff: &str,
    seed: u64,
    n_trees: usize,
    min_node_size: usize,
    pi_level: f64,
    reason_k: usize,
    clothing_k: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let records = pipeline::load_records(&path).map_err(err)?;
    let pre = preprocess(&records, &PipelineOptions { reason_k, clothing_k }).map_err(err)?;
    let cutoff = parse_date(cutoff, "cutoff")?;
    let cfg = OccurrenceConfig { n_trees, min_node_size, pi_level, ..OccurrenceConfig::new(seed, cutoff) };
    let race_cfg = ForestConfig::classification(derive_seed_u64(seed, &["occurrence", "race"]))
        .with_trees(n_trees)
        .with_min_node_size(25.max(min_node_size));
    let proxies: Vec<String> = DEFAULT_RACE_PROXIES.iter().map(|s| s.to_string()).collect();
    let race_pred = predict_race_from_proxies(&pre.data, &proxies, cutoff, &race_cfg).map_err(err)?;
    let panel = build_daily_panel(&records, &pre.reason_cluster_ids, pre.reason_clusters.k, &race_pred)
        .map_err(err)?;
    let outcome = run_occurrence(&panel, &cfg).map_err(err)?;

    let out = PyDict::new(py);
    let dates = PyList::new(py, outcome.dates.iter().map(|d| d.to_string()))?;
    out.set_item("dates", dates)?;
    out.set_item("truth", outcome.truth.clone())?;
    out.set_item("with_proxy", forecast_arm(py, &outcome.hier)?)?;
    out.set_item("without_proxy", forecast_arm(py, &outcome.naive)?)?;
    Ok(out)
}

#[pymodule]
fn proxyforest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyQuantileIndex>()?;
    m.add_class::<PyHierarchicalModel>()?;
    m.add_class::<PyClustering>()?;
    m.add_function(wrap_pyfunction!(soundex, m)?)?;
    m.add_function(wrap_pyfunction!(soundex_phrase, m)?)?;
    m.add_function(wrap_pyfunction!(jaro_winkler, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(synth_records, m)?)?;
    m.add_function(wrap_pyfunction!(reason_study, m)?)?;
    m.add_function(wrap_pyfunction!(occurrence_study, m)?)?;
    Ok(())
}
