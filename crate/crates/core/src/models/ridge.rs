use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_LAMBDA: f64 = 1e-8;

/// Linear model on standardized inputs with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl Ridge {
    /// Minimizes `‖X w + b − y‖² + λ‖w‖²` in closed form.
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        let lambda = lambda.max(MIN_LAMBDA);
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        if n == 0 || d == 0 || y.len() != n {
            return Err(Error::InvalidInput("ridge needs a non-empty design matrix".into()));
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let mut x_mean = vec![0.0; d];
        for row in x {
            for (m, v) in x_mean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let xc = DMatrix::from_fn(n, d, |i, j| x[i][j] - x_mean[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let mut gram = xc.transpose() * &xc;
        for i in 0..d {
            gram[(i, i)] += lambda;
        }
        let rhs = xc.transpose() * &yc;
        let chol = gram.clone().cholesky().ok_or_else(|| {
            Error::InvalidInput("ridge normal equations are not positive definite".into())
        })?;
        let mut w = chol.solve(&rhs);
        // one step of iterative refinement
        let resid = &rhs - &gram * &w;
        w += chol.solve(&resid);
        let intercept = y_mean - w.dot(&DVector::from_vec(x_mean));
        Ok(Self {
            weights: w.iter().copied().collect(),
            intercept,
            lambda,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Gradient of `½‖X w + b − y‖² + ½λ‖w‖²` with respect to `w`.
    pub fn objective_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.weights.iter().map(|w| self.lambda * w).collect();
        for (row, t) in x.iter().zip(y) {
            let r = self.predict(row) - t;
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += r * xj;
            }
        }
        g
    }
}
