//! Mean-decrease-impurity importance for tree ensembles: per feature,
//! the weighted impurity decrease of every node splitting on it,
//! summed per tree with node sample fractions, averaged over trees,
//! and normalized to sum 1.

use crate::dataset::FeatureSchema;
use crate::explainers::ImportanceRanking;
use crate::models::TrainedModel;
use crate::{Error, Result};

pub fn impurity_importance(
    model: &TrainedModel,
    schema: &FeatureSchema,
) -> Result<ImportanceRanking> {
    let trees = match model {
        TrainedModel::RandomForest(m) => &m.trees,
        TrainedModel::GradientBoosting(m) => &m.stages,
        _ => return Err(Error::Config("impurity importance requires trees".into())),
    };
    if trees.is_empty() {
        return Err(Error::Data("model has no trees".into()));
    }
    let mut totals = vec![0.0; schema.n_features()];
    for tree in trees {
        tree.accumulate_impurity_decrease(&mut totals);
    }
    for t in &mut totals {
        *t /= trees.len() as f64;
    }
    let sum: f64 = totals.iter().sum();
    if sum > 0.0 {
        for t in &mut totals {
            *t /= sum;
        }
    }
    let scores = schema
        .feature_names()
        .iter()
        .map(|n| n.to_string())
        .zip(totals)
        .collect();
    Ok(ImportanceRanking::from_scores(
        "impurity",
        model.kind().name(),
        scores,
    ))
}
