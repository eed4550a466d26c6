//! Gradient boosting for log-loss: each stage fits a depth-limited
//! regression tree to the negative gradient (label minus current
//! probability), with leaf values replaced by a Newton step
//! sum(gradient) / (sum(hessian) + ridge).

use serde::{Deserialize, Serialize};

use crate::dataset::{sigmoid, Dataset};
use crate::models::logistic::mean_log_loss;
use crate::models::tree::{Node, SplitCriterion, Tree, TreeParams};
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::{Error, Result};

const LEAF_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Log-odds of the training base rate.
    pub initial_score: f64,
    pub stages: Vec<Tree>,
    pub learning_rate: f64,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_stages: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

pub fn train_gradient_boosting(
    train: &Dataset,
    params: &BoostingParams,
    seed: u64,
) -> Result<BoostedModel> {
    if params.n_stages < 1 {
        return Err(Error::Config("n_stages must be >= 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::Config("learning_rate must be in (0, 1]".into()));
    }
    let (bad, good) = train.class_counts();
    if bad == 0 || good == 0 {
        return Err(Error::Data("single class in training data".into()));
    }
    let n = train.n_rows();
    let base_rate = good as f64 / n as f64;
    let initial_score = (base_rate / (1.0 - base_rate)).ln();

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: None,
        criterion: SplitCriterion::Variance,
    };
    let all_idx: Vec<usize> = (0..n).collect();
    let mut scores = vec![initial_score; n];
    let mut stages = Vec::with_capacity(params.n_stages);

    for stage in 0..params.n_stages {
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let residuals: Vec<f64> = train
            .labels
            .iter()
            .zip(&probs)
            .map(|(&y, &p)| y as f64 - p)
            .collect();
        let mut rng = rng_from_seed(derive_seed_indexed(seed, "boost_stage", stage as u64));
        let (mut tree, leaf_of) =
            Tree::fit(&train.rows, &residuals, &all_idx, &tree_params, &mut rng);

        // Newton leaf values over the fitted partition
        let mut grad_sum = vec![0.0; tree.nodes.len()];
        let mut hess_sum = vec![0.0; tree.nodes.len()];
        for (i, &leaf) in leaf_of.iter().enumerate() {
            grad_sum[leaf] += residuals[i];
            hess_sum[leaf] += probs[i] * (1.0 - probs[i]);
        }
        for (id, node) in tree.nodes.iter_mut().enumerate() {
            if let Node::Leaf { value, .. } = node {
                *value = grad_sum[id] / (hess_sum[id] + LEAF_RIDGE);
            }
        }

        for (i, &leaf) in leaf_of.iter().enumerate() {
            let v = match &tree.nodes[leaf] {
                Node::Leaf { value, .. } => *value,
                Node::Split { .. } => unreachable!(),
            };
            scores[i] += params.learning_rate * v;
        }
        let loss = mean_log_loss(
            scores.iter().map(|&s| sigmoid(s)),
            train.labels.iter().copied(),
        );
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite training loss at stage {stage}"
            )));
        }
        stages.push(tree);
    }

    Ok(BoostedModel {
        initial_score,
        stages,
        learning_rate: params.learning_rate,
        n_features: train.schema.n_features(),
    })
}

impl BoostedModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut score = self.initial_score;
        for tree in &self.stages {
            score += self.learning_rate * tree.predict(row);
        }
        sigmoid(score).clamp(1e-12, 1.0 - 1e-12)
    }
}
