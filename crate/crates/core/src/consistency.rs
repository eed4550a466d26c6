//! Agreement between static feature importance and dynamic
//! perturbation sensitivity: Spearman rank correlation and top-k
//! Jaccard overlap over the shared feature set, plus flags for
//! features that look important statically but barely move the model
//! under perturbation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::explainers::ImportanceRanking;
use crate::perturbation::SensitivityScore;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsistencyConfig {
    /// Top-k size for the overlap metric.
    pub top_k: usize,
    /// Curve ranges below this are "dynamically flat".
    pub flatness_threshold: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            top_k: 10,
            flatness_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub feature: String,
    pub static_rank: usize,
    pub dynamic_rank: usize,
    pub sensitivity_score: f64,
    pub reversal_flagged: bool,
    /// High static rank but sub-threshold dynamic movement.
    pub statically_important_dynamically_flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueComparison {
    pub technique: String,
    pub model_kind: String,
    pub spearman: f64,
    pub top_k_jaccard: f64,
    pub k: usize,
    pub compared_features: Vec<String>,
    pub features: Vec<FeatureComparison>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub comparisons: Vec<TechniqueComparison>,
}

fn shared_features(a: &ImportanceRanking, b: &ImportanceRanking) -> Vec<String> {
    let in_b: BTreeSet<&str> = b.entries.iter().map(|e| e.feature.as_str()).collect();
    a.entries
        .iter()
        .filter(|e| in_b.contains(e.feature.as_str()))
        .map(|e| e.feature.clone())
        .collect()
}

/// Average ranks (1-based, ties averaged) of `features` under the
/// scores in `ranking`.
fn average_ranks(ranking: &ImportanceRanking, features: &[String]) -> Vec<f64> {
    let scores: Vec<f64> = features
        .iter()
        .map(|f| ranking.score_of(f).unwrap_or(0.0))
        .collect();
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ over the features shared by both rankings.
pub fn spearman_rank_correlation(a: &ImportanceRanking, b: &ImportanceRanking) -> Result<f64> {
    let shared = shared_features(a, b);
    let n = shared.len();
    if n < 3 {
        return Err(Error::Data(format!("only {n} shared features, need >= 3")));
    }
    let ra = average_ranks(a, &shared);
    let rb = average_ranks(b, &shared);
    let mean = (n as f64 + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::Numeric("degenerate ranking (all ranks tied)".into()));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

/// Jaccard overlap of the top-k feature sets.
pub fn top_k_overlap(a: &ImportanceRanking, b: &ImportanceRanking, k: usize) -> Result<f64> {
    if a.entries.len() < k || b.entries.len() < k {
        return Err(Error::Data(format!(
            "k = {k} exceeds a ranking's length ({} / {})",
            a.entries.len(),
            b.entries.len()
        )));
    }
    let top_a: BTreeSet<&str> = a.entries[..k].iter().map(|e| e.feature.as_str()).collect();
    let top_b: BTreeSet<&str> = b.entries[..k].iter().map(|e| e.feature.as_str()).collect();
    let inter = top_a.intersection(&top_b).count() as f64;
    let union = top_a.union(&top_b).count() as f64;
    Ok(inter / union)
}

/// Compare every static ranking against the dynamic one. Rankings are
/// restricted to their shared feature set; k shrinks to fit when the
/// shared set is smaller than the configured top-k.
pub fn build_consistency_report(
    static_rankings: &[ImportanceRanking],
    dynamic_ranking: &ImportanceRanking,
    sensitivities: &[SensitivityScore],
    config: &ConsistencyConfig,
) -> Result<ConsistencyReport> {
    if static_rankings.is_empty() {
        return Err(Error::Config("no static rankings given".into()));
    }
    let mut comparisons = Vec::new();
    for stat in static_rankings {
        let shared = shared_features(stat, dynamic_ranking);
        if shared.len() < 3 {
            return Err(Error::Data(format!(
                "technique {:?} shares only {} features with the dynamic ranking",
                stat.technique,
                shared.len()
            )));
        }
        let restrict = |r: &ImportanceRanking| {
            ImportanceRanking::from_scores(
                r.technique.clone(),
                r.model_kind.clone(),
                shared
                    .iter()
                    .map(|f| (f.clone(), r.score_of(f).unwrap_or(0.0)))
                    .collect(),
            )
        };
        let stat_r = restrict(stat);
        let dyn_r = restrict(dynamic_ranking);
        let k = config.top_k.min(shared.len());
        let spearman = spearman_rank_correlation(&stat_r, &dyn_r)?;
        let jaccard = top_k_overlap(&stat_r, &dyn_r, k)?;

        let mut features = Vec::new();
        let mut flagged_flat = Vec::new();
        let mut flagged_reversal = Vec::new();
        for f in &shared {
            let static_rank = stat_r.rank_of(f).unwrap();
            let dynamic_rank = dyn_r.rank_of(f).unwrap();
            let sens = sensitivities.iter().find(|s| {
                s.target == *f || s.target.starts_with(&format!("{f}="))
            });
            let score = dyn_r.score_of(f).unwrap_or(0.0);
            let reversal_flagged = sensitivities
                .iter()
                .filter(|s| s.target == *f || s.target.starts_with(&format!("{f}=")))
                .any(|s| !s.reversal_points.is_empty());
            let in_static_top = static_rank < k;
            let flat = score < config.flatness_threshold;
            let statically_important_dynamically_flat = in_static_top && flat;
            if statically_important_dynamically_flat {
                flagged_flat.push(f.clone());
            }
            if in_static_top && reversal_flagged {
                flagged_reversal.push(f.clone());
            }
            features.push(FeatureComparison {
                feature: f.clone(),
                static_rank,
                dynamic_rank,
                sensitivity_score: sens.map(|s| s.score).unwrap_or(score),
                reversal_flagged,
                statically_important_dynamically_flat,
            });
        }

        let mut verdict = format!(
            "{} vs dynamic on {}: spearman {:.3}, top-{k} jaccard {:.3}",
            stat.technique, stat.model_kind, spearman, jaccard
        );
        if flagged_flat.is_empty() && flagged_reversal.is_empty() {
            verdict.push_str("; no discontinuity flags");
        } else {
            if !flagged_flat.is_empty() {
                verdict.push_str(&format!(
                    "; static-important, dynamically flat: {}",
                    flagged_flat.join(", ")
                ));
            }
            if !flagged_reversal.is_empty() {
                verdict.push_str(&format!(
                    "; sign reversals in static top-{k}: {}",
                    flagged_reversal.join(", ")
                ));
            }
        }
        comparisons.push(TechniqueComparison {
            technique: stat.technique.clone(),
            model_kind: stat.model_kind.clone(),
            spearman,
            top_k_jaccard: jaccard,
            k,
            compared_features: shared,
            features,
            verdict,
        });
    }
    Ok(ConsistencyReport { comparisons })
}

impl ConsistencyReport {
    /// Human-readable summary, one verdict line per comparison.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Static vs dynamic importance consistency\n\n");
        for c in &self.comparisons {
            out.push_str(&format!("## {} ({})\n\n", c.technique, c.model_kind));
            out.push_str(&format!(
                "- Spearman rank correlation: {:.4}\n- Top-{} Jaccard overlap: {:.4}\n- Verdict: {}\n\n",
                c.spearman, c.k, c.top_k_jaccard, c.verdict
            ));
            out.push_str("| feature | static rank | dynamic rank | sensitivity | flags |\n");
            out.push_str("|---|---|---|---|---|\n");
            for f in &c.features {
                let mut flags = Vec::new();
                if f.statically_important_dynamically_flat {
                    flags.push("flat");
                }
                if f.reversal_flagged {
                    flags.push("reversal");
                }
                out.push_str(&format!(
                    "| {} | {} | {} | {:.4} | {} |\n",
                    f.feature,
                    f.static_rank + 1,
                    f.dynamic_rank + 1,
                    f.sensitivity_score,
                    if flags.is_empty() { "-".to_string() } else { flags.join(",") }
                ));
            }
            out.push('\n');
        }
        out
    }
}
