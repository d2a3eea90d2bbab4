//! Single-hidden-layer ReLU network trained by mini-batch Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            learning_rate: 3e-3,
            epochs: 200,
            batch_size: 32,
            l2: 1e-4,
        }
    }
}

/// Parameters laid out flat: `w1` (hidden × inputs, row-major), `b1`, `w2`, `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub l2: f64,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + hidden + hidden + 1
    }

    /// He-initialized network.
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, l2: f64, rng: &mut R) -> Self {
        let mut params = vec![0.0; Self::param_count(inputs, hidden)];
        let s1 = (2.0 / inputs as f64).sqrt();
        let s2 = (2.0 / hidden as f64).sqrt();
        for w in &mut params[..hidden * inputs] {
            *w = s1 * Distribution::<f64>::sample(&StandardNormal, rng);
        }
        let off = hidden * inputs + hidden;
        for w in &mut params[off..off + hidden] {
            *w = s2 * Distribution::<f64>::sample(&StandardNormal, rng);
        }
        Self {
            inputs,
            hidden,
            l2,
            params,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.hidden;
        (b1, w2, b2)
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut out = p[b2];
        for h in 0..self.hidden {
            let row = &p[h * self.inputs..(h + 1) * self.inputs];
            let z = p[b1 + h] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            out += p[w2 + h] * z.max(0.0);
        }
        out
    }

    /// Mean half-squared error plus `½ l2 ‖weights‖²` over a batch, and its
    /// gradient with respect to the flat parameter vector.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let n = xs.len() as f64;
        let mut grad = vec![0.0; p.len()];
        let mut loss = 0.0;
        let mut z = vec![0.0; self.hidden];
        for (x, y) in xs.iter().zip(ys) {
            let mut out = p[b2];
            for h in 0..self.hidden {
                let row = &p[h * self.inputs..(h + 1) * self.inputs];
                z[h] = p[b1 + h] + row.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
                out += p[w2 + h] * z[h].max(0.0);
            }
            let err = out - y;
            loss += 0.5 * err * err / n;
            let g_out = err / n;
            grad[b2] += g_out;
            for h in 0..self.hidden {
                if z[h] > 0.0 {
                    grad[w2 + h] += g_out * z[h];
                    let g_z = g_out * p[w2 + h];
                    grad[b1 + h] += g_z;
                    let row = &mut grad[h * self.inputs..(h + 1) * self.inputs];
                    for (g, xi) in row.iter_mut().zip(x.iter()) {
                        *g += g_z * xi;
                    }
                }
            }
        }
        for i in (0..b1).chain(w2..b2) {
            loss += 0.5 * self.l2 * p[i] * p[i];
            grad[i] += self.l2 * p[i];
        }
        (loss, grad)
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], config: &MlpConfig, seed: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput("MLP needs matching non-empty rows".into()));
        }
        if config.hidden == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!("bad MLP configuration {config:?}")));
        }
        let mut rng = stream_rng(seed, domain::MODEL, 0);
        let mut net = Self::init(x[0].len(), config.hidden, config.l2, &mut rng);
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut m = vec![0.0; net.params.len()];
        let mut v = vec![0.0; net.params.len()];
        let mut step = 0i32;
        let mut order: Vec<usize> = (0..x.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(config.batch_size) {
                let xs: Vec<&[f64]> = chunk.iter().map(|&i| x[i].as_slice()).collect();
                let ys: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
                let (_, g) = net.loss_and_grad(&xs, &ys);
                step += 1;
                let c1 = 1.0 - beta1.powi(step);
                let c2 = 1.0 - beta2.powi(step);
                for i in 0..g.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    net.params[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                }
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_a_simple_function() {
        let mut rng = stream_rng(1, 0, 0);
        let x: Vec<Vec<f64>> = (0..256)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] - 0.5 * r[1] + 0.25).collect();
        let cfg = MlpConfig {
            epochs: 300,
            l2: 0.0,
            ..Default::default()
        };
        let net = Mlp::fit(&x, &y, &cfg, 3).unwrap();
        let mse: f64 = x.iter().zip(&y).map(|(r, t)| (net.forward(r) - t).powi(2)).sum::<f64>() / 256.0;
        assert!(mse < 1e-3, "mse {mse}");
        assert_eq!(net, Mlp::fit(&x, &y, &cfg, 3).unwrap());
    }

    #[test]
    fn loss_matches_forward() {
        let mut rng = stream_rng(2, 0, 0);
        let net = Mlp::init(4, 10, 0.0, &mut rng);
        let x = [0.1, -0.3, 0.7, 1.2];
        let (loss, _) = net.loss_and_grad(&[&x], &[0.5]);
        assert!((loss - 0.5 * (net.forward(&x) - 0.5).powi(2)).abs() < 1e-15);
    }
}
