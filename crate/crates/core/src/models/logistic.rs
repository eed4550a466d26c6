//! L2-regularized logistic regression trained by Newton iterations on
//! internally standardized features.

use serde::{Deserialize, Serialize};

use crate::dataset::{sigmoid, Dataset};
use crate::linalg;
use crate::{Error, Result};

/// Per-feature affine transform recorded at train time and applied to
/// every prediction. Zero-variance columns get stddev 1 so they pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Standardizer {
        let n = rows.len().max(1) as f64;
        let width = rows.first().map_or(0, |r| r.len());
        let mut means = vec![0.0; width];
        for row in rows {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; width];
        for row in rows {
            for ((v, &x), &m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let stddevs = vars
            .iter()
            .map(|&v| {
                let s = (v / n).sqrt();
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Standardizer { means, stddevs }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Weights in standardized space, one per feature.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-4,
            max_iters: 100,
            tol: 1e-8,
        }
    }
}

// Weight-norm cap applied when l2 = 0 and the data is separable.
const MAX_WEIGHT_NORM: f64 = 30.0;

pub fn train_logistic(train: &Dataset, params: &LogisticParams) -> Result<LogisticModel> {
    let (bad, good) = train.class_counts();
    if bad == 0 || good == 0 {
        return Err(Error::Data("single class in training data".into()));
    }
    if params.l2 < 0.0 {
        return Err(Error::Config("l2 must be nonnegative".into()));
    }
    let standardizer = Standardizer::fit(&train.rows);
    let z: Vec<Vec<f64>> = train.rows.iter().map(|r| standardizer.apply(r)).collect();
    let y: Vec<f64> = train.labels.iter().map(|&l| l as f64).collect();
    let n = z.len();
    let p = train.schema.n_features();

    // beta = [weights..., intercept]
    let mut beta = vec![0.0; p + 1];
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..params.max_iters {
        iterations = iter + 1;
        let mut grad = vec![0.0; p + 1];
        let mut hess = vec![vec![0.0; p + 1]; p + 1];
        for i in 0..n {
            let zi = &z[i];
            let eta = linalg::dot(&beta[..p], zi) + beta[p];
            let mu = sigmoid(eta);
            let r = mu - y[i];
            let w = (mu * (1.0 - mu)).max(1e-10);
            for a in 0..p {
                grad[a] += r * zi[a];
                for b in a..p {
                    hess[a][b] += w * zi[a] * zi[b];
                }
                hess[a][p] += w * zi[a];
            }
            grad[p] += r;
            hess[p][p] += w;
        }
        // ridge on weights only, never on the intercept
        for a in 0..p {
            grad[a] += params.l2 * beta[a];
            hess[a][a] += params.l2;
        }
        for a in 0..p + 1 {
            for b in 0..a {
                hess[a][b] = hess[b][a];
            }
            hess[a][a] += 1e-10;
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < params.tol {
            converged = true;
            break;
        }
        let step = linalg::solve(&hess, &grad)?;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b -= s;
        }
        if params.l2 == 0.0 {
            let wnorm = beta[..p].iter().map(|w| w * w).sum::<f64>().sqrt();
            if wnorm > MAX_WEIGHT_NORM {
                // separable data: cap and stop
                let scale = MAX_WEIGHT_NORM / wnorm;
                for b in beta[..p].iter_mut() {
                    *b *= scale;
                }
                break;
            }
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric("logistic training diverged".into()));
        }
    }
    Ok(LogisticModel {
        weights: beta[..p].to_vec(),
        intercept: beta[p],
        standardizer,
        converged,
        iterations,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        sigmoid(linalg::dot(&self.weights, &z) + self.intercept).clamp(1e-12, 1.0 - 1e-12)
    }

    pub fn log_loss(&self, ds: &Dataset) -> f64 {
        mean_log_loss(
            ds.rows.iter().map(|r| self.predict_proba(r)),
            ds.labels.iter().copied(),
        )
    }
}

pub fn mean_log_loss(probs: impl Iterator<Item = f64>, labels: impl Iterator<Item = u8>) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (p, y) in probs.zip(labels) {
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        total -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
        n += 1;
    }
    total / n.max(1) as f64
}
