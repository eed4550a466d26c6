//! Local linear surrogates: sample a synthetic neighborhood around one
//! instance, weight samples by proximity in standardized space, and
//! fit a weighted ridge regression to the model's probabilities. The
//! surrogate's coefficients explain that single prediction.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::explainers::Attribution;
use crate::linalg;
use crate::models::{Standardizer, TrainedModel};
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LimeParams {
    pub n_samples: usize,
    /// Proximity kernel width in standardized space; `None` uses
    /// 0.75 · √n_features.
    pub kernel_width: Option<f64>,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for LimeParams {
    fn default() -> Self {
        LimeParams {
            n_samples: 2000,
            kernel_width: None,
            ridge_lambda: 1e-3,
            seed: 0,
        }
    }
}

pub fn lime_explain(
    model: &TrainedModel,
    instance: &[f64],
    instance_id: u64,
    train: &Dataset,
    params: &LimeParams,
) -> Result<Attribution> {
    let schema = &train.schema;
    let m = schema.n_features();
    if instance.len() != m {
        return Err(Error::Data("instance width does not match schema".into()));
    }
    if params.n_samples < m + 2 {
        return Err(Error::Config(format!(
            "n_samples {} must be >= n_features + 2 = {}",
            params.n_samples,
            m + 2
        )));
    }
    if params.ridge_lambda <= 0.0 {
        return Err(Error::Config("ridge lambda must be > 0".into()));
    }
    let kernel_width = params
        .kernel_width
        .unwrap_or(0.75 * (m as f64).sqrt());

    let standardizer = Standardizer::fit(&train.rows);
    let players = schema.players();
    // per-group training level frequencies
    let group_freqs: Vec<(Vec<usize>, Vec<f64>)> = players
        .iter()
        .filter(|p| p.columns.len() > 1)
        .map(|p| {
            let mut freq = vec![0.0; p.columns.len()];
            for row in &train.rows {
                for (k, &c) in p.columns.iter().enumerate() {
                    freq[k] += row[c];
                }
            }
            let total: f64 = freq.iter().sum();
            if total > 0.0 {
                for f in &mut freq {
                    *f /= total;
                }
            }
            (p.columns.clone(), freq)
        })
        .collect();
    let continuous = schema.continuous_columns();

    let mut rng = rng_from_seed(derive_seed_indexed(params.seed, "lime", instance_id));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let z_instance = standardizer.apply(instance);

    let mut x_std: Vec<Vec<f64>> = Vec::with_capacity(params.n_samples);
    let mut y: Vec<f64> = Vec::with_capacity(params.n_samples);
    let mut w: Vec<f64> = Vec::with_capacity(params.n_samples);
    for _ in 0..params.n_samples {
        let mut sample = instance.to_vec();
        for &c in &continuous {
            sample[c] = instance[c] + normal.sample(&mut rng) * standardizer.stddevs[c];
        }
        for (cols, freq) in &group_freqs {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = cols.len() - 1;
            for (k, &p) in freq.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            for (k, &c) in cols.iter().enumerate() {
                sample[c] = if k == chosen { 1.0 } else { 0.0 };
            }
        }
        let z = standardizer.apply(&sample);
        let d2: f64 = z
            .iter()
            .zip(&z_instance)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        w.push((-d2 / (kernel_width * kernel_width)).exp());
        y.push(model.predict_proba_row(&sample)?);
        x_std.push(z);
    }

    // weighted centering, then ridge without intercept
    let w_total: f64 = w.iter().sum();
    if w_total <= 0.0 {
        return Err(Error::Numeric("all LIME sample weights vanished".into()));
    }
    let y_mean: f64 = y.iter().zip(&w).map(|(yi, wi)| yi * wi).sum::<f64>() / w_total;
    let mut x_mean = vec![0.0; m];
    for (row, &wi) in x_std.iter().zip(&w) {
        for (s, &v) in x_mean.iter_mut().zip(row) {
            *s += wi * v;
        }
    }
    for s in &mut x_mean {
        *s /= w_total;
    }
    let x_centered: Vec<Vec<f64>> = x_std
        .iter()
        .map(|row| row.iter().zip(&x_mean).map(|(v, mu)| v - mu).collect())
        .collect();
    let y_centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let coeffs = linalg::weighted_ridge(&x_centered, &y_centered, &w, params.ridge_lambda)?;

    Ok(Attribution {
        instance_id,
        technique: "lime".into(),
        names: schema.feature_names().iter().map(|s| s.to_string()).collect(),
        values: coeffs,
        base_value: y_mean,
    })
}
