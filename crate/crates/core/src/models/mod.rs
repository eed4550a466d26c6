//! The four classifier families behind one probability-prediction
//! interface.

pub mod boosting;
pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use boosting::{train_gradient_boosting, BoostedModel, BoostingParams};
pub use forest::{train_random_forest, ForestModel, ForestParams};
pub use logistic::{train_logistic, LogisticModel, LogisticParams, Standardizer};
pub use mlp::{train_mlp, MlpModel, MlpParams};

use crate::dataset::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Logistic,
    RandomForest,
    GradientBoosting,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logistic,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
        ModelKind::Mlp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Any trained classifier. The uniform contract: `predict_proba`
/// returns P(label = 1) in the open interval (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Logistic(LogisticModel),
    RandomForest(ForestModel),
    GradientBoosting(BoostedModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Logistic(_) => ModelKind::Logistic,
            TrainedModel::RandomForest(_) => ModelKind::RandomForest,
            TrainedModel::GradientBoosting(_) => ModelKind::GradientBoosting,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Logistic(m) => m.weights.len(),
            TrainedModel::RandomForest(m) => m.n_features,
            TrainedModel::GradientBoosting(m) => m.n_features,
            TrainedModel::Mlp(m) => m.standardizer.means.len(),
        }
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::Data(format!(
                "row width {} does not match model width {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(match self {
            TrainedModel::Logistic(m) => m.predict_proba(row),
            TrainedModel::RandomForest(m) => m.predict_proba(row),
            TrainedModel::GradientBoosting(m) => m.predict_proba(row),
            TrainedModel::Mlp(m) => m.predict_proba(row),
        })
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba_row(r)).collect()
    }
}

/// Confusion counts at the 0.5 decision threshold. A probability of
/// exactly 0.5 classifies as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn accuracy(&self) -> f64 {
        let correct = self.true_positive + self.true_negative;
        let total = correct + self.false_positive + self.false_negative;
        correct as f64 / total as f64
    }
}

pub fn evaluate_accuracy(model: &TrainedModel, holdout: &Dataset) -> Result<(f64, Confusion)> {
    if holdout.n_rows() == 0 {
        return Err(Error::Data("empty holdout".into()));
    }
    let mut c = Confusion::default();
    for (row, &y) in holdout.rows.iter().zip(&holdout.labels) {
        let decision = model.predict_proba_row(row)? >= 0.5;
        match (decision, y) {
            (true, 0) => c.false_positive += 1,
            (true, _) => c.true_positive += 1,
            (false, 0) => c.true_negative += 1,
            (false, _) => c.false_negative += 1,
        }
    }
    Ok((c.accuracy(), c))
}
