//! Run configuration: a single JSON document drives the whole
//! pipeline. One master seed; every stage derives its own stream from
//! (master, stage name), so a run is a pure function of (input bytes,
//! config).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fiaudit::consistency::ConsistencyConfig;
use fiaudit::dataset::{CsvSchema, LabelRule, SyntheticSpec};
use fiaudit::models::{BoostingParams, ForestParams, LogisticParams, MlpParams, ModelKind};
use fiaudit::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataConfig,
    /// Class-balanced sample size taken before splitting; `None` keeps
    /// every loaded row.
    #[serde(default)]
    pub sample_size: Option<usize>,
    #[serde(default = "default_holdout_fraction")]
    pub holdout_fraction: f64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub explainers: ExplainersConfig,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub consistency: ConsistencyConfig,
}

fn default_holdout_fraction() -> f64 {
    0.2
}

fn default_master_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataConfig {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        #[serde(default)]
        label_rule: LabelRule,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelsConfig {
    /// Model kinds to train; all four by default.
    #[serde(default = "default_enabled")]
    pub enabled: Vec<String>,
    #[serde(default)]
    pub logistic: LogisticParams,
    #[serde(default)]
    pub random_forest: ForestParams,
    #[serde(default)]
    pub gradient_boosting: BoostingParams,
    #[serde(default)]
    pub mlp: MlpParams,
}

fn default_enabled() -> Vec<String> {
    ModelKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            enabled: default_enabled(),
            logistic: LogisticParams::default(),
            random_forest: ForestParams::default(),
            gradient_boosting: BoostingParams::default(),
            mlp: MlpParams::default(),
        }
    }
}

impl ModelsConfig {
    pub fn enabled_kinds(&self) -> Result<Vec<ModelKind>> {
        if self.enabled.is_empty() {
            return Err(Error::Config("no models enabled".into()));
        }
        self.enabled.iter().map(|s| ModelKind::parse(s)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainersConfig {
    /// Holdout instances to attribute (SHAP + LIME).
    #[serde(default = "default_n_instances")]
    pub n_instances: usize,
    #[serde(default = "default_lime_samples")]
    pub lime_samples: usize,
    /// `None` = 0.75 · √n_features.
    #[serde(default)]
    pub lime_kernel_width: Option<f64>,
    #[serde(default = "default_lime_ridge")]
    pub lime_ridge: f64,
    /// Background rows for Shapley marginalization, sampled
    /// class-balanced from the training split.
    #[serde(default = "default_shap_background")]
    pub shap_background: usize,
    /// Sampled coalitions when the player count exceeds the exact
    /// enumeration cap.
    #[serde(default = "default_shap_coalitions")]
    pub shap_coalitions: usize,
    #[serde(default = "default_permutation_repeats")]
    pub permutation_repeats: usize,
    #[serde(default = "default_gam_k")]
    pub gam_k: usize,
    #[serde(default = "default_gam_max_iters")]
    pub gam_max_iters: usize,
    /// Per-class cap for label-forced GAM rankings.
    #[serde(default = "default_gam_subsample")]
    pub gam_subsample: usize,
}

fn default_n_instances() -> usize {
    25
}
fn default_lime_samples() -> usize {
    2000
}
fn default_lime_ridge() -> f64 {
    1e-3
}
fn default_shap_background() -> usize {
    100
}
fn default_shap_coalitions() -> usize {
    2048
}
fn default_permutation_repeats() -> usize {
    5
}
fn default_gam_k() -> usize {
    2
}
fn default_gam_max_iters() -> usize {
    100
}
fn default_gam_subsample() -> usize {
    1000
}

impl Default for ExplainersConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSection {
    #[serde(default = "default_multiplier_grid")]
    pub multiplier_grid: Vec<f64>,
    #[serde(default = "default_proportion_grid")]
    pub proportion_grid: Vec<f64>,
    #[serde(default = "default_flip_repeats")]
    pub flip_repeats: usize,
    #[serde(default = "default_reversal_tolerance")]
    pub reversal_tolerance: f64,
    /// Restrict perturbation to these features/groups; empty = all.
    #[serde(default)]
    pub features: Vec<String>,
}

fn default_multiplier_grid() -> Vec<f64> {
    (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect()
}
fn default_proportion_grid() -> Vec<f64> {
    (1..=20).map(|i| 0.05 * i as f64).collect()
}
fn default_flip_repeats() -> usize {
    25
}
fn default_reversal_tolerance() -> f64 {
    0.005
}

impl Default for PerturbationSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config("holdout_fraction must be in (0, 1)".into()));
        }
        self.models.enabled_kinds()?;
        if let DataConfig::Synthetic(spec) = &self.data {
            spec.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical (serde field order) JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}
