//! Random forest classifier: bootstrap-resampled gini trees with a
//! random feature subset per split. Per-tree RNG streams derive from
//! (seed, tree index), so serial and parallel fits agree bit for bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::models::tree::{SplitCriterion, Tree, TreeParams};
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub params: ForestParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// `None` = floor(sqrt(n_features)).
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 12,
            min_samples_leaf: 1,
            features_per_split: None,
        }
    }
}

pub fn train_random_forest(train: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees < 1 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    if params.max_depth == 0 {
        return Err(Error::Config("max_depth must be >= 1".into()));
    }
    if train.n_rows() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    let n_features = train.schema.n_features();
    let k = params
        .features_per_split
        .unwrap_or_else(|| ((n_features as f64).sqrt().floor() as usize).max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: Some(k.min(n_features)),
        criterion: SplitCriterion::Gini,
    };
    let targets: Vec<f64> = train.labels.iter().map(|&l| l as f64).collect();
    let n = train.n_rows();
    let mut trees = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let mut rng = rng_from_seed(derive_seed_indexed(seed, "forest_tree", t as u64));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let (tree, _) = Tree::fit(&train.rows, &targets, &bootstrap, &tree_params, &mut rng);
        trees.push(tree);
    }
    Ok(ForestModel {
        trees,
        n_features,
        params: params.clone(),
    })
}

impl ForestModel {
    /// Arithmetic mean of per-tree leaf probabilities, nudged into the
    /// open interval so downstream log-odds stay finite.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        (sum / self.trees.len() as f64).clamp(1e-12, 1.0 - 1e-12)
    }

    pub fn tree_probabilities(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, ContinuousSpec, Distribution, SyntheticSpec};

    fn spec(n_rows: usize) -> SyntheticSpec {
        SyntheticSpec {
            n_rows,
            continuous: vec![
                ContinuousSpec {
                    name: "f0".into(),
                    dist: Distribution::Uniform { low: 0.0, high: 2.0 },
                },
                ContinuousSpec {
                    name: "f1".into(),
                    dist: Distribution::Uniform { low: 0.0, high: 2.0 },
                },
            ],
            groups: vec![],
            true_weights: vec![2.0, -1.0],
            intercept: -1.0,
            noise_rate: 0.0,
            label_column: "status".into(),
        }
    }

    #[test]
    fn prediction_is_mean_of_tree_probabilities() {
        let ds = generate_synthetic(&spec(300), 5).unwrap();
        let params = ForestParams {
            n_trees: 7,
            max_depth: 4,
            ..Default::default()
        };
        let model = train_random_forest(&ds, &params, 42).unwrap();
        for row in ds.rows.iter().take(10) {
            let probs = model.tree_probabilities(row);
            let mean = probs.iter().sum::<f64>() / probs.len() as f64;
            let p = model.predict_proba(row);
            assert!((p - mean.clamp(1e-12, 1.0 - 1e-12)).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = generate_synthetic(&spec(200), 5).unwrap();
        let params = ForestParams {
            n_trees: 5,
            max_depth: 3,
            ..Default::default()
        };
        let a = train_random_forest(&ds, &params, 9).unwrap();
        let b = train_random_forest(&ds, &params, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_depth_rejected() {
        let ds = generate_synthetic(&spec(50), 5).unwrap();
        let params = ForestParams {
            max_depth: 0,
            ..Default::default()
        };
        assert!(train_random_forest(&ds, &params, 1).is_err());
    }
}
