//! Shapley value attribution with background marginalization.
//!
//! The value of a coalition S is the mean model output over the
//! background set with the instance's values kept for players in S and
//! background values substituted elsewhere. [`exact_shapley`]
//! enumerates all 2^M coalitions; [`kernel_shap`] solves the weighted
//! least squares formulation with the Shapley kernel, either over the
//! full enumeration (equal to the exact values) or a sampled subset of
//! coalitions.
//!
//! Players are perturbable units: a continuous column, or a one-hot
//! group moved as a block.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{Dataset, Player};
use crate::explainers::Attribution;
use crate::linalg;
use crate::models::TrainedModel;
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::{Error, Result};

/// Exact enumeration is capped here; larger games need sampling.
pub const MAX_EXACT_PLAYERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoalitionSampling {
    /// Enumerate all 2^M coalitions; matches [`exact_shapley`].
    Exact,
    /// Sample this many coalitions with probability proportional to
    /// the Shapley kernel weight.
    Sampled { n_coalitions: usize },
}

/// Mean model output over the background with players outside `mask`
/// replaced by each background row's values.
fn coalition_value(
    model: &TrainedModel,
    instance: &[f64],
    background: &Dataset,
    players: &[Player],
    mask: u64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut row = vec![0.0; instance.len()];
    for bg in &background.rows {
        row.copy_from_slice(bg);
        for (j, player) in players.iter().enumerate() {
            if mask >> j & 1 == 1 {
                for &c in &player.columns {
                    row[c] = instance[c];
                }
            }
        }
        total += model.predict_proba_row(&row)?;
    }
    Ok(total / background.n_rows() as f64)
}

fn check_inputs(instance: &[f64], background: &Dataset) -> Result<Vec<Player>> {
    if background.n_rows() == 0 {
        return Err(Error::Data("empty background set".into()));
    }
    if instance.len() != background.schema.n_features() {
        return Err(Error::Data("instance width does not match schema".into()));
    }
    Ok(background.schema.players())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Exact Shapley values over all 2^M coalitions.
///
/// Additivity holds by construction: base_value + Σφ equals the model
/// output on the instance up to float roundoff.
pub fn exact_shapley(
    model: &TrainedModel,
    instance: &[f64],
    instance_id: u64,
    background: &Dataset,
) -> Result<Attribution> {
    let players = check_inputs(instance, background)?;
    let m = players.len();
    if m > MAX_EXACT_PLAYERS {
        return Err(Error::Config(format!(
            "{m} players exceed the exact enumeration cap {MAX_EXACT_PLAYERS}; use kernel_shap"
        )));
    }
    let n_masks = 1u64 << m;
    let mut values = Vec::with_capacity(n_masks as usize);
    for mask in 0..n_masks {
        values.push(coalition_value(model, instance, background, &players, mask)?);
    }
    // weight by coalition size: |S|! (M-|S|-1)! / M!
    let m_fact = factorial(m);
    let size_weight: Vec<f64> = (0..m)
        .map(|s| factorial(s) * factorial(m - s - 1) / m_fact)
        .collect();
    let mut phi = vec![0.0; m];
    for mask in 0..n_masks {
        let s = mask.count_ones() as usize;
        for j in 0..m {
            if mask >> j & 1 == 0 {
                let with_j = mask | 1 << j;
                phi[j] += size_weight[s] * (values[with_j as usize] - values[mask as usize]);
            }
        }
    }
    Ok(Attribution {
        instance_id,
        technique: "exact_shapley".into(),
        names: players.into_iter().map(|p| p.name).collect(),
        values: phi,
        base_value: values[0],
    })
}

fn shapley_kernel_weight(m: usize, s: usize) -> f64 {
    // (M - 1) / (C(M, s) · s · (M - s))
    let mut binom = 1.0;
    for i in 0..s {
        binom = binom * (m - i) as f64 / (i + 1) as f64;
    }
    (m - 1) as f64 / (binom * (s * (m - s)) as f64)
}

/// Kernel SHAP: weighted least squares over coalitions with the
/// Shapley kernel, constrained so base_value = v(∅) and
/// Σφ = f(x) − v(∅).
pub fn kernel_shap(
    model: &TrainedModel,
    instance: &[f64],
    instance_id: u64,
    background: &Dataset,
    sampling: CoalitionSampling,
    seed: u64,
) -> Result<Attribution> {
    let players = check_inputs(instance, background)?;
    let m = players.len();
    if m < 2 {
        return Err(Error::Config("kernel SHAP needs at least 2 players".into()));
    }

    // coalition masks to regress on (proper nonempty subsets)
    let masks: Vec<u64> = match sampling {
        CoalitionSampling::Exact => (1..(1u64 << m) - 1).collect(),
        CoalitionSampling::Sampled { n_coalitions } => {
            if n_coalitions < m + 1 {
                return Err(Error::Config(format!(
                    "{n_coalitions} coalitions < players + 1 = {}",
                    m + 1
                )));
            }
            let mut rng = rng_from_seed(derive_seed_indexed(seed, "kernel_shap", instance_id));
            // size distribution proportional to total kernel mass per
            // size: kernel(s) · C(M, s) ∝ 1 / (s (M - s))
            let size_mass: Vec<f64> = (1..m).map(|s| 1.0 / (s * (m - s)) as f64).collect();
            let total: f64 = size_mass.iter().sum();
            let mut out = Vec::with_capacity(n_coalitions);
            let mut indices: Vec<usize> = (0..m).collect();
            for _ in 0..n_coalitions {
                let u: f64 = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut size = m - 1;
                for (k, &w) in size_mass.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        size = k + 1;
                        break;
                    }
                }
                indices.shuffle(&mut rng);
                let mask = indices[..size].iter().fold(0u64, |acc, &j| acc | 1 << j);
                out.push(mask);
            }
            out
        }
    };

    let v_empty = coalition_value(model, instance, background, &players, 0)?;
    let fx = model.predict_proba_row(instance)?;

    // eliminate the last player via the efficiency constraint:
    // regress v(S) − v0 − z_M (fx − v0) on (z_j − z_M), j < M
    let mut x = Vec::with_capacity(masks.len());
    let mut y = Vec::with_capacity(masks.len());
    let mut w = Vec::with_capacity(masks.len());
    for &mask in &masks {
        let v = coalition_value(model, instance, background, &players, mask)?;
        let z_last = (mask >> (m - 1) & 1) as f64;
        let row: Vec<f64> = (0..m - 1)
            .map(|j| (mask >> j & 1) as f64 - z_last)
            .collect();
        x.push(row);
        y.push(v - v_empty - z_last * (fx - v_empty));
        w.push(match sampling {
            CoalitionSampling::Exact => shapley_kernel_weight(m, mask.count_ones() as usize),
            // sampling already follows the kernel; weight uniformly
            CoalitionSampling::Sampled { .. } => 1.0,
        });
    }
    let head = linalg::weighted_ridge(&x, &y, &w, 1e-10)?;
    let mut phi = head;
    let sum_head: f64 = phi.iter().sum();
    phi.push(fx - v_empty - sum_head);

    Ok(Attribution {
        instance_id,
        technique: "kernel_shap".into(),
        names: players.into_iter().map(|p| p.name).collect(),
        values: phi,
        base_value: v_empty,
    })
}
