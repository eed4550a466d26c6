//! Dynamic what-if analysis on a holdout sample.
//!
//! Continuous features get a multiplier sweep: every holdout value of
//! the feature is scaled by each grid multiplier while all other
//! features stay fixed, and the curve records the mean predicted
//! probability. Categorical groups get a flip schedule: for each grid
//! proportion p, ⌈p · n₁⌉ randomly chosen rows currently not at the
//! target level are flipped to it (n₁ = the level's original count),
//! repeated and averaged so one draw's luck does not shape the curve.
//!
//! Perturbations act on copies; the holdout is never modified.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::explainers::ImportanceRanking;
use crate::models::TrainedModel;
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::{Error, Result};

/// Mean predicted probability across the holdout at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCurve {
    /// Continuous feature name, or "group=level" for a flip curve.
    pub target: String,
    /// Multipliers (continuous) or flip proportions (categorical),
    /// strictly increasing.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Mean probability on the unperturbed holdout.
    pub base_value: f64,
    pub model_kind: String,
}

/// Curve spread plus shape diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScore {
    pub target: String,
    /// max(values) − min(values).
    pub score: f64,
    pub monotone: bool,
    /// Grid points where the curve's direction reverses by more than
    /// the tolerance.
    pub reversal_points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Default {0.5, 0.6, ..., 1.5}.
    pub multiplier_grid: Vec<f64>,
    /// Default {0.05, 0.10, ..., 1.0}.
    pub proportion_grid: Vec<f64>,
    pub flip_repeats: usize,
    pub reversal_tolerance: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            multiplier_grid: (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect(),
            proportion_grid: (1..=20).map(|i| 0.05 * i as f64).collect(),
            flip_repeats: 25,
            reversal_tolerance: 0.005,
            seed: 0,
        }
    }
}

/// Flip the chosen rows to `target_col`, zeroing the rest of the
/// one-hot group so every row keeps exactly one active level.
pub fn flip_rows(rows: &mut [Vec<f64>], group_cols: &[usize], target_col: usize, chosen: &[usize]) {
    for &i in chosen {
        for &c in group_cols {
            rows[i][c] = 0.0;
        }
        rows[i][target_col] = 1.0;
    }
}

fn mean_proba(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Data("empty holdout".into()));
    }
    let mut total = 0.0;
    for row in rows {
        total += model.predict_proba_row(row)?;
    }
    Ok(total / rows.len() as f64)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty perturbation grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Multiplier sweep over one continuous feature. Deterministic; at
/// multiplier 1.0 the curve reproduces the base value exactly.
pub fn sweep_continuous(
    model: &TrainedModel,
    holdout: &Dataset,
    feature: &str,
    multipliers: &[f64],
) -> Result<PerturbationCurve> {
    check_grid(multipliers)?;
    let col = holdout
        .schema
        .column_index(feature)
        .ok_or_else(|| Error::Config(format!("unknown feature {feature:?}")))?;
    if !holdout.schema.continuous_columns().contains(&col) {
        return Err(Error::Config(format!(
            "{feature:?} is categorical; use flip_categorical"
        )));
    }
    let base_value = mean_proba(model, &holdout.rows)?;
    let mut values = Vec::with_capacity(multipliers.len());
    let mut scratch = holdout.rows.clone();
    for &m in multipliers {
        for (s, orig) in scratch.iter_mut().zip(&holdout.rows) {
            s[col] = m * orig[col];
        }
        values.push(mean_proba(model, &scratch)?);
    }
    Ok(PerturbationCurve {
        target: feature.to_string(),
        grid: multipliers.to_vec(),
        values,
        base_value,
        model_kind: model.kind().name().to_string(),
    })
}

/// Flip schedule toward one level of a one-hot group. For each
/// proportion p, `repeats` independent draws each flip ⌈p·n₁⌉ rows to
/// the target level (zeroing the rest of the group) and the outcomes
/// are averaged. RNG streams are keyed by (seed, grid index, repeat),
/// so evaluation order never changes results.
pub fn flip_categorical(
    model: &TrainedModel,
    holdout: &Dataset,
    group: &str,
    target_level: &str,
    proportions: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<PerturbationCurve> {
    check_grid(proportions)?;
    if proportions[0] <= 0.0 || *proportions.last().unwrap() > 1.0 {
        return Err(Error::Config("proportion grid must lie in (0, 1]".into()));
    }
    if repeats < 1 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let group_cols = holdout.schema.group_columns(group);
    if group_cols.is_empty() {
        return Err(Error::Config(format!("unknown group {group:?}")));
    }
    let level_name = format!("{group}={target_level}");
    let target_col = holdout
        .schema
        .column_index(&level_name)
        .ok_or_else(|| Error::Config(format!("level {target_level:?} not in group {group:?}")))?;

    let zeros: Vec<usize> = (0..holdout.n_rows())
        .filter(|&i| holdout.rows[i][target_col] == 0.0)
        .collect();
    let n_ones = holdout.n_rows() - zeros.len();
    if n_ones == 0 {
        return Err(Error::Data(format!(
            "level {target_level:?} absent from holdout"
        )));
    }
    let base_value = mean_proba(model, &holdout.rows)?;

    let mut values = Vec::with_capacity(proportions.len());
    for (gi, &p) in proportions.iter().enumerate() {
        let wanted = (p * n_ones as f64).ceil() as usize;
        let n_flip = wanted.min(zeros.len()); // clamp when 0-rows run out
        let mut total = 0.0;
        for rep in 0..repeats {
            let mut rng = rng_from_seed(derive_seed_indexed(
                seed,
                &format!("flip_{group}_{target_level}_{gi}"),
                rep as u64,
            ));
            let mut pool = zeros.clone();
            pool.shuffle(&mut rng);
            let mut rows = holdout.rows.clone();
            flip_rows(&mut rows, &group_cols, target_col, &pool[..n_flip]);
            total += mean_proba(model, &rows)?;
        }
        values.push(total / repeats as f64);
    }
    Ok(PerturbationCurve {
        target: level_name,
        grid: proportions.to_vec(),
        values,
        base_value,
        model_kind: model.kind().name().to_string(),
    })
}

/// Curve range plus monotonicity / reversal diagnostics.
pub fn sensitivity_score(curve: &PerturbationCurve, tol: f64) -> SensitivityScore {
    let min = curve.values.iter().copied().fold(f64::MAX, f64::min);
    let max = curve.values.iter().copied().fold(f64::MIN, f64::max);
    let score = (max - min).max(0.0);

    let mut direction = 0i8; // sign of the last significant move
    let mut monotone = true;
    let mut reversal_points = Vec::new();
    for (w, window) in curve.values.windows(2).enumerate() {
        let diff = window[1] - window[0];
        if diff.abs() <= tol {
            continue;
        }
        let sign = if diff > 0.0 { 1 } else { -1 };
        if direction != 0 && sign != direction {
            monotone = false;
            reversal_points.push(curve.grid[w + 1]);
        }
        direction = sign;
    }
    SensitivityScore {
        target: curve.target.clone(),
        score,
        monotone,
        reversal_points,
    }
}

/// One sensitivity entry per perturbable unit: continuous features by
/// multiplier sweep, one-hot groups by the largest flip-curve spread
/// over the group's levels.
pub fn dynamic_importance(
    model: &TrainedModel,
    holdout: &Dataset,
    config: &PerturbationConfig,
) -> Result<(ImportanceRanking, Vec<PerturbationCurve>, Vec<SensitivityScore>)> {
    let players = holdout.schema.players();
    if players.is_empty() {
        return Err(Error::Config("no perturbable features".into()));
    }
    let mut curves = Vec::new();
    let mut sensitivities = Vec::new();
    let mut scores = Vec::new();
    for player in &players {
        if player.columns.len() == 1 {
            let curve = sweep_continuous(model, holdout, &player.name, &config.multiplier_grid)?;
            let s = sensitivity_score(&curve, config.reversal_tolerance);
            scores.push((player.name.clone(), s.score));
            curves.push(curve);
            sensitivities.push(s);
        } else {
            let mut best = 0.0f64;
            for &c in &player.columns {
                let feature = &holdout.schema.features[c];
                let level = match &feature.kind {
                    crate::dataset::FeatureKind::CategoricalLevel { level, .. } => level.clone(),
                    crate::dataset::FeatureKind::Continuous => unreachable!(),
                };
                // a level missing from the holdout cannot anchor a flip
                // schedule; skip it rather than fail the whole ranking
                let curve = match flip_categorical(
                    model,
                    holdout,
                    &player.name,
                    &level,
                    &config.proportion_grid,
                    config.flip_repeats,
                    config.seed,
                ) {
                    Ok(c) => c,
                    Err(Error::Data(_)) => continue,
                    Err(e) => return Err(e),
                };
                let s = sensitivity_score(&curve, config.reversal_tolerance);
                best = best.max(s.score);
                curves.push(curve);
                sensitivities.push(s);
            }
            scores.push((player.name.clone(), best));
        }
    }
    let ranking =
        ImportanceRanking::from_scores("dynamic_perturbation", model.kind().name(), scores);
    Ok((ranking, curves, sensitivities))
}
