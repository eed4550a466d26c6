//! Static feature-importance techniques: impurity and permutation
//! importance, LIME, exact Shapley values with a Kernel SHAP estimator,
//! global |SHAP| aggregation, direct logit coefficients, and GAM-style
//! clustering of local attributions.
//!
//! One-hot groups are single players for Shapley and permutation: a
//! coalition keeps or replaces the whole group, so perturbed rows can
//! never go multi-hot. Per-level scores remain available through the
//! impurity and logit-coefficient rankings.

pub mod gam;
pub mod impurity;
pub mod lime;
pub mod permutation;
pub mod shapley;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSchema;
use crate::models::TrainedModel;
use crate::{Error, Result};

pub use gam::{gam_by_label, gam_cluster, GamCluster, GamMode, GamResult};
pub use impurity::impurity_importance;
pub use lime::{lime_explain, LimeParams};
pub use permutation::{permutation_importance, PermutationImportance};
pub use shapley::{exact_shapley, kernel_shap, CoalitionSampling};

/// Per-instance signed contributions over a named dimension set —
/// encoded columns for LIME and logit coefficients, perturbable
/// players (continuous features and whole one-hot groups) for Shapley.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub instance_id: u64,
    pub technique: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub base_value: f64,
}

impl Attribution {
    /// |φ_j| / Σ|φ|, a nonnegative unit-sum vector. All-zero
    /// attributions normalize to uniform.
    pub fn normalized_magnitudes(&self) -> Vec<f64> {
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total <= 0.0 {
            vec![1.0 / self.values.len().max(1) as f64; self.values.len()]
        } else {
            self.values.iter().map(|v| v.abs() / total).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub score: f64,
}

/// Ordered (feature, score) list: descending by score, ties broken
/// lexicographically by name so every ranking is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub technique: String,
    pub model_kind: String,
    pub entries: Vec<RankEntry>,
}

impl ImportanceRanking {
    pub fn from_scores(
        technique: impl Into<String>,
        model_kind: impl Into<String>,
        scores: Vec<(String, f64)>,
    ) -> ImportanceRanking {
        let mut entries: Vec<RankEntry> = scores
            .into_iter()
            .map(|(feature, score)| RankEntry {
                feature,
                score: score.max(0.0),
            })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(&b.feature)));
        ImportanceRanking {
            technique: technique.into(),
            model_kind: model_kind.into(),
            entries,
        }
    }

    pub fn score_of(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.score)
    }

    /// 0-based position of a feature in the ranking.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }

    /// Collapse per-column scores onto the schema's players by summing
    /// one-hot level columns into their group. Scores already at player
    /// granularity pass through.
    pub fn aggregate_to_players(&self, schema: &FeatureSchema) -> ImportanceRanking {
        let players = schema.players();
        let scores = players
            .iter()
            .map(|p| {
                let direct = self.score_of(&p.name);
                let summed: f64 = p
                    .columns
                    .iter()
                    .filter_map(|&c| self.score_of(&schema.features[c].name))
                    .sum();
                (p.name.clone(), direct.unwrap_or(summed))
            })
            .collect();
        ImportanceRanking::from_scores(self.technique.clone(), self.model_kind.clone(), scores)
    }
}

/// Global importance as the sum of absolute attribution values across
/// instances (no cancellation between signs).
pub fn global_importance_from_attributions(
    attributions: &[Attribution],
    model_kind: &str,
) -> Result<ImportanceRanking> {
    let first = attributions
        .first()
        .ok_or_else(|| Error::Data("no attributions given".into()))?;
    let mut totals = vec![0.0; first.values.len()];
    for a in attributions {
        if a.names != first.names {
            return Err(Error::Data("attributions cover different feature spaces".into()));
        }
        for (t, v) in totals.iter_mut().zip(&a.values) {
            *t += v.abs();
        }
    }
    let scores = first
        .names
        .iter()
        .cloned()
        .zip(totals)
        .collect();
    Ok(ImportanceRanking::from_scores(
        format!("sum_abs_{}", first.technique),
        model_kind,
        scores,
    ))
}

/// Importance read directly off the logit model: absolute standardized
/// weight per encoded column (one-hot levels reported per level).
pub fn logit_coefficient_importance(
    model: &TrainedModel,
    schema: &FeatureSchema,
) -> Result<ImportanceRanking> {
    let TrainedModel::Logistic(logit) = model else {
        return Err(Error::Config(
            "coefficient importance requires a logistic model".into(),
        ));
    };
    let scores = schema
        .feature_names()
        .iter()
        .zip(&logit.weights)
        .map(|(n, w)| (n.to_string(), w.abs()))
        .collect();
    Ok(ImportanceRanking::from_scores(
        "logit_coefficients",
        model.kind().name(),
        scores,
    ))
}
