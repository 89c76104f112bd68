//! Crate-wide error type.

use thiserror::Error;

/// Unified error for dataset ingestion, model fitting, and artifact output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// CSV row failed to parse. `row` is the 1-based data row number,
    /// not counting the header.
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// Schema is inconsistent with the data or with itself.
    #[error("schema error: {0}")]
    Schema(String),

    /// Invalid configuration value (CLI flag, config file, or builder).
    #[error("config error: {0}")]
    Config(String),

    /// Dataset has no rows, or a fit was requested on an empty selection.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// A train/test split produced an empty partition.
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    /// Prediction-time input does not match the trained model.
    #[error("prediction error: {0}")]
    Prediction(String),

    /// Clustering input is degenerate (too few items, bad k, bad matrix).
    #[error("cluster error: {0}")]
    Cluster(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse { row, msg: msg.into() }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
