//! End-to-end orchestration: load or generate data, train the enabled
//! models, run the static explainers and the perturbation sweeps, and
//! assemble the consistency report. Every stage derives its RNG stream
//! from the master seed, so reruns with the same config are
//! byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fiaudit::consistency::{build_consistency_report, ConsistencyReport};
use fiaudit::dataset::{
    balanced_sample, generate_synthetic, load_csv, train_holdout_split, Dataset, DropReport,
};
use fiaudit::explainers::{
    exact_shapley, gam_by_label, gam_cluster, global_importance_from_attributions,
    impurity_importance, kernel_shap, lime_explain, logit_coefficient_importance,
    permutation_importance, Attribution, CoalitionSampling, GamResult, ImportanceRanking,
    LimeParams,
};
use fiaudit::models::{
    evaluate_accuracy, train_gradient_boosting, train_logistic, train_mlp, train_random_forest,
    Confusion, ModelKind, TrainedModel,
};
use fiaudit::perturbation::{
    dynamic_importance, PerturbationConfig, PerturbationCurve, SensitivityScore,
};
use fiaudit::rng::derive_seed;
use fiaudit::{Error, Result};

use crate::config::{DataConfig, RunConfig};

pub struct PreparedData {
    pub train: Dataset,
    pub holdout: Dataset,
    pub drop_report: Option<DropReport>,
}

pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let (full, drop_report) = match &config.data {
        DataConfig::Synthetic(spec) => (
            generate_synthetic(spec, derive_seed(config.master_seed, "data"))?,
            None,
        ),
        DataConfig::Csv {
            path,
            schema,
            label_rule,
        } => {
            let (ds, report) = load_csv(path, schema, label_rule)?;
            (ds, Some(report))
        }
    };
    let sampled = match config.sample_size {
        Some(n) => balanced_sample(&full, n, derive_seed(config.master_seed, "sample"))?,
        None => full,
    };
    let (train, holdout) = train_holdout_split(
        &sampled,
        config.holdout_fraction,
        derive_seed(config.master_seed, "split"),
    )?;
    Ok(PreparedData {
        train,
        holdout,
        drop_report,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model: String,
    pub accuracy: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedSuite {
    pub models: Vec<TrainedModel>,
    pub accuracy: Vec<AccuracyRow>,
}

pub fn train_models(
    config: &RunConfig,
    data: &PreparedData,
    kinds: &[ModelKind],
) -> Result<TrainedSuite> {
    if kinds.is_empty() {
        return Err(Error::Config("no models enabled".into()));
    }
    let seed = config.master_seed;
    let mut models = Vec::new();
    let mut accuracy = Vec::new();
    for kind in kinds {
        let model = match kind {
            ModelKind::Logistic => {
                TrainedModel::Logistic(train_logistic(&data.train, &config.models.logistic)?)
            }
            ModelKind::RandomForest => TrainedModel::RandomForest(train_random_forest(
                &data.train,
                &config.models.random_forest,
                derive_seed(seed, "forest"),
            )?),
            ModelKind::GradientBoosting => TrainedModel::GradientBoosting(
                train_gradient_boosting(
                    &data.train,
                    &config.models.gradient_boosting,
                    derive_seed(seed, "boosting"),
                )?,
            ),
            ModelKind::Mlp => TrainedModel::Mlp(train_mlp(
                &data.train,
                &config.models.mlp,
                derive_seed(seed, "mlp"),
            )?),
        };
        let (acc, confusion) = evaluate_accuracy(&model, &data.holdout)?;
        accuracy.push(AccuracyRow {
            model: kind.name().to_string(),
            accuracy: acc,
            confusion,
        });
        models.push(model);
    }
    Ok(TrainedSuite { models, accuracy })
}

/// Class-balanced background for Shapley marginalization; falls back
/// to a plain prefix when one class is too small.
fn shap_background(train: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let n = n.min(train.n_rows());
    let n_even = n - n % 2;
    if n_even >= 2 {
        if let Ok(bg) = balanced_sample(train, n_even, seed) {
            return Ok(bg);
        }
    }
    Ok(Dataset {
        schema: train.schema.clone(),
        rows: train.rows[..n].to_vec(),
        labels: train.labels[..n].to_vec(),
        row_ids: train.row_ids[..n].to_vec(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelExplanations {
    pub model: String,
    /// Static rankings produced for this model (technique-tagged).
    pub rankings: Vec<ImportanceRanking>,
    /// Raw permutation scores before the ranking floor at zero.
    pub permutation_raw: Vec<(String, f64)>,
    pub shap_attributions: Vec<Attribution>,
    pub lime_attributions: Vec<Attribution>,
    pub gam: GamResult,
    pub gam_good: ImportanceRanking,
    pub gam_bad: ImportanceRanking,
    /// Techniques skipped for this model kind.
    pub skipped: Vec<String>,
}

pub fn explain_models(
    config: &RunConfig,
    data: &PreparedData,
    suite: &TrainedSuite,
) -> Result<Vec<ModelExplanations>> {
    let ex = &config.explainers;
    let seed = config.master_seed;
    let background = shap_background(
        &data.train,
        ex.shap_background,
        derive_seed(seed, "shap_background"),
    )?;
    let n_instances = ex.n_instances.min(data.holdout.n_rows());
    if n_instances == 0 {
        return Err(Error::Data("no holdout instances to explain".into()));
    }
    let n_players = data.train.schema.players().len();

    let mut out = Vec::new();
    for model in &suite.models {
        let kind = model.kind();
        let mut rankings = Vec::new();
        let mut skipped = Vec::new();

        match impurity_importance(model, &data.train.schema) {
            Ok(r) => rankings.push(r),
            Err(_) => skipped.push("impurity".to_string()),
        }
        match logit_coefficient_importance(model, &data.train.schema) {
            Ok(r) => rankings.push(r),
            Err(_) => skipped.push("logit_coefficients".to_string()),
        }
        let perm = permutation_importance(
            model,
            &data.holdout,
            ex.permutation_repeats,
            derive_seed(seed, "permutation"),
        )?;
        rankings.push(perm.ranking.clone());

        let mut shap_attributions = Vec::new();
        let mut lime_attributions = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_instances {
            let instance = &data.holdout.rows[i];
            let id = data.holdout.row_ids[i];
            let attr = if n_players <= fiaudit::explainers::shapley::MAX_EXACT_PLAYERS {
                exact_shapley(model, instance, id, &background)?
            } else {
                kernel_shap(
                    model,
                    instance,
                    id,
                    &background,
                    CoalitionSampling::Sampled {
                        n_coalitions: ex.shap_coalitions,
                    },
                    derive_seed(seed, "kernel_shap"),
                )?
            };
            shap_attributions.push(attr);
            lime_attributions.push(lime_explain(
                model,
                instance,
                id,
                &data.train,
                &LimeParams {
                    n_samples: ex.lime_samples,
                    kernel_width: ex.lime_kernel_width,
                    ridge_lambda: ex.lime_ridge,
                    seed: derive_seed(seed, "lime"),
                },
            )?);
            labels.push(data.holdout.labels[i]);
        }
        rankings.push(global_importance_from_attributions(
            &shap_attributions,
            kind.name(),
        )?);

        let gam = gam_cluster(
            &shap_attributions,
            ex.gam_k.min(shap_attributions.len()),
            ex.gam_max_iters,
            derive_seed(seed, "gam"),
        )?;
        let (gam_good, gam_bad) = gam_by_label(
            &shap_attributions,
            &labels,
            Some(ex.gam_subsample),
            derive_seed(seed, "gam_label"),
            kind.name(),
        )?;

        out.push(ModelExplanations {
            model: kind.name().to_string(),
            rankings,
            permutation_raw: perm.raw_scores,
            shap_attributions,
            lime_attributions,
            gam,
            gam_good,
            gam_bad,
            skipped,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelPerturbations {
    pub model: String,
    pub dynamic_ranking: ImportanceRanking,
    pub curves: Vec<PerturbationCurve>,
    pub sensitivities: Vec<SensitivityScore>,
}

pub fn perturb_models(
    config: &RunConfig,
    data: &PreparedData,
    suite: &TrainedSuite,
) -> Result<Vec<ModelPerturbations>> {
    let p = &config.perturbation;
    let perturbation_config = PerturbationConfig {
        multiplier_grid: p.multiplier_grid.clone(),
        proportion_grid: p.proportion_grid.clone(),
        flip_repeats: p.flip_repeats,
        reversal_tolerance: p.reversal_tolerance,
        seed: derive_seed(config.master_seed, "perturbation"),
    };
    let holdout = restrict_to_features(&data.holdout, &p.features)?;
    let mut out = Vec::new();
    for model in &suite.models {
        let (dynamic_ranking, curves, sensitivities) =
            dynamic_importance(model, &holdout, &perturbation_config)?;
        out.push(ModelPerturbations {
            model: model.kind().name().to_string(),
            dynamic_ranking,
            curves,
            sensitivities,
        });
    }
    Ok(out)
}

/// The perturbed feature subset only narrows which curves are swept;
/// rows keep their full width (models need every column).
fn restrict_to_features(holdout: &Dataset, features: &[String]) -> Result<Dataset> {
    if features.is_empty() {
        return Ok(holdout.clone());
    }
    for f in features {
        let known = holdout
            .schema
            .players()
            .iter()
            .any(|p| p.name == *f);
        if !known {
            return Err(Error::Config(format!(
                "perturbation feature {f:?} is not a perturbable unit"
            )));
        }
    }
    Ok(holdout.clone())
}

pub fn build_report(
    config: &RunConfig,
    data: &PreparedData,
    explanations: &[ModelExplanations],
    perturbations: &[ModelPerturbations],
) -> Result<ConsistencyReport> {
    let perturbed_features: Option<&[String]> = if config.perturbation.features.is_empty() {
        None
    } else {
        Some(&config.perturbation.features)
    };
    let mut comparisons = Vec::new();
    for (exp, pert) in explanations.iter().zip(perturbations) {
        let statics: Vec<ImportanceRanking> = exp
            .rankings
            .iter()
            .map(|r| {
                let agg = r.aggregate_to_players(&data.train.schema);
                match perturbed_features {
                    Some(fs) => ImportanceRanking::from_scores(
                        agg.technique.clone(),
                        agg.model_kind.clone(),
                        fs.iter()
                            .map(|f| (f.clone(), agg.score_of(f).unwrap_or(0.0)))
                            .collect(),
                    ),
                    None => agg,
                }
            })
            .collect();
        let dynamic = match perturbed_features {
            Some(fs) => ImportanceRanking::from_scores(
                pert.dynamic_ranking.technique.clone(),
                pert.dynamic_ranking.model_kind.clone(),
                fs.iter()
                    .map(|f| (f.clone(), pert.dynamic_ranking.score_of(f).unwrap_or(0.0)))
                    .collect(),
            ),
            None => pert.dynamic_ranking.clone(),
        };
        let report =
            build_consistency_report(&statics, &dynamic, &pert.sensitivities, &config.consistency)?;
        comparisons.extend(report.comparisons);
    }
    Ok(ConsistencyReport { comparisons })
}

pub fn write_synthetic_csv(config: &RunConfig, path: &Path) -> Result<()> {
    let DataConfig::Synthetic(spec) = &config.data else {
        return Err(Error::Config("gen-synth needs a synthetic data config".into()));
    };
    let ds = generate_synthetic(spec, derive_seed(config.master_seed, "data"))?;
    fiaudit::dataset::write_csv(
        &ds,
        &fiaudit::dataset::LabelRule::default(),
        &spec.csv_schema(),
        path,
    )
}
