//! Training, explaining, and stress-testing binary tabular classifiers.
//!
//! The crate is organized around a single pipeline:
//!
//! 1. [`dataset`] — CSV ingestion, label derivation, one-hot encoding,
//!    class-balanced sampling, train/holdout splits, and a synthetic
//!    generator with known ground-truth coefficients.
//! 2. [`models`] — four classifier families (logistic regression, random
//!    forest, gradient boosting, multi-layer perceptron) behind one
//!    probability-prediction interface.
//! 3. [`explainers`] — static feature importance: impurity, permutation,
//!    LIME, exact Shapley, Kernel SHAP, global |SHAP| aggregation,
//!    logit coefficients, and GAM-style attribution clustering.
//! 4. [`perturbation`] — dynamic what-if analysis: continuous multiplier
//!    sweeps and categorical flip schedules, with sensitivity scoring.
//! 5. [`consistency`] — rank-level agreement between static and dynamic
//!    importance, with flags for features that are statically important
//!    but dynamically flat.
//!
//! Every randomized operation is a pure function of its inputs and an
//! explicit seed; sub-seeds are derived with [`rng::derive_seed`].

pub mod consistency;
pub mod dataset;
pub mod explainers;
pub mod linalg;
pub mod models;
pub mod perturbation;
pub mod rng;

use thiserror::Error;

/// Crate-wide error type.
///
/// The three variants map onto the CLI's exit codes: configuration
/// problems, data problems, and numeric failures during training or
/// explanation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
