//! Random-forest toolkit built around a two-layer model for protected classes:
//! a bottom-layer forest predicts the protected attribute from proxy covariates
//! and a top-layer forest consumes that prediction as a latent feature, so the
//! raw attribute never enters the final model. Ships with quantile-forest
//! prediction intervals, a seeded Monte Carlo comparison harness, phonetic
//! string clustering for free-text categories, and a daily-occurrence
//! forecasting pipeline over field-interview records.

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod hier;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod quantile;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
