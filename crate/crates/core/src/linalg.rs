//! Small dense linear-algebra helpers.
//!
//! Everything here operates on desk-scale systems (tens of unknowns):
//! Newton steps for logistic regression, ridge normal equations for
//! LIME, and the Kernel SHAP weighted least squares solve.

use crate::{Error, Result};

/// Solve `A x = b` for a square system by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n);
    let mut m: Vec<Vec<f64>> = a.iter().map(|r| r.clone()).collect();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return Err(Error::Numeric("singular linear system".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in row + 1..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite solution".into()));
    }
    Ok(x)
}

/// Weighted ridge regression: minimizes Σ w_i (y_i − x_i·β)² + λ‖β‖².
/// Returns β. Rows of `x` are observations.
pub fn weighted_ridge(x: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = x.len();
    assert!(n == y.len() && n == w.len());
    let p = x.first().map_or(0, |r| r.len());
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let wi = w[i];
        for a in 0..p {
            let xa = x[i][a];
            xty[a] += wi * xa * y[i];
            for b in a..p {
                xtx[a][b] += wi * xa * x[i][b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[a][b] = xtx[b][a];
        }
        xtx[a][a] += lambda;
    }
    solve(&xtx, &xty)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
