use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// k-nearest-neighbour regression: mean target of the `k` closest training
/// rows in Euclidean distance. Distance ties resolve to the lower row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[f64], k: usize) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput("k-NN needs matching non-empty rows".into()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("k must be positive".into()));
        }
        Ok(Self {
            k: k.min(x.len()),
            rows: x.to_vec(),
            targets: y.to_vec(),
        })
    }

    pub fn predict(&self, q: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        let mut nearest: Vec<(f64, usize)> = dist[..k].to_vec();
        nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        nearest.iter().map(|(_, i)| self.targets[*i]).sum::<f64>() / k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nn_returns_own_target() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]];
        let m = Knn::fit(&x, &[10.0, 20.0, 30.0], 1).unwrap();
        for (row, t) in x.iter().zip([10.0, 20.0, 30.0]) {
            assert_eq!(m.predict(row), t);
        }
    }

    #[test]
    fn k_averages_and_clamps() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        let m = Knn::fit(&x, &[1.0, 3.0, 100.0], 2).unwrap();
        assert_eq!(m.predict(&[0.4]), 2.0);
        let all = Knn::fit(&x, &[1.0, 3.0, 100.0], 50).unwrap();
        assert_eq!(all.k, 3);
        assert!(Knn::fit(&x, &[1.0, 3.0, 100.0], 0).is_err());
    }
}
