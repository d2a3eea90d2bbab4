use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augmentation::{AugmentedSet, FEATURE_SECONDS};
use crate::error::{Error, Result};
use crate::io::GroundTruthSet;
use crate::rng::{domain, stream_rng};

/// Pressures at seconds 1..=60 of a pumping event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_SECONDS {
            return Err(Error::InvalidInput(format!(
                "feature vector must have {FEATURE_SECONDS} entries, got {}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "feature {k} must be a positive pressure, got {}",
                values[k]
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<FeatureVector>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureVector>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if features.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("targets must be finite".into()));
        }
        Ok(Self { features, targets })
    }

    /// First-minute features and minimum-pressure targets of every event.
    pub fn from_ground_truth(gt: &GroundTruthSet) -> Result<Self> {
        let features = gt
            .curves
            .iter()
            .map(|c| FeatureVector::new(c.sample_seconds(FEATURE_SECONDS)))
            .collect::<Result<Vec<_>>>()?;
        let targets = gt.curves.iter().map(|c| c.min_pressure()).collect();
        Self::new(features, targets)
    }

    pub fn from_augmented(set: &AugmentedSet) -> Result<Self> {
        let features = set
            .samples
            .iter()
            .map(|s| FeatureVector::new(s.first_minute.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, set.targets())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            rows.iter().map(|&r| self.features[r].clone()).collect(),
            rows.iter().map(|&r| self.targets[r]).collect(),
        )
    }
}

/// Shuffles by `seed` and puts the first `⌈ratio·n⌉` rows in the training set.
pub fn split_classic(data: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("split needs at least 5 rows, got {n}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    // tolerance absorbs representation error such as 0.8 * 10 = 8.000…01
    let n_train = (ratio * n as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidInput(format!(
            "ratio {ratio} on {n} rows leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, domain::SPLIT, 0));
    let (train, test) = order.split_at(n_train);
    Ok((data.subset(train)?, data.subset(test)?))
}

/// Per-dimension affine standardization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Zero-variance dimensions keep a unit scale.
    pub fn fit(rows: &[&[f64]]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy(n: usize) -> Dataset {
        let features = (0..n)
            .map(|i| FeatureVector::new((0..60).map(|j| 1000.0 - (i * j) as f64 * 0.01).collect()).unwrap())
            .collect();
        Dataset::new(features, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split_classic(&toy(10), 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = split_classic(&toy(203), 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (163, 40));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let d = toy(30);
        let a = split_classic(&d, 0.8, 9).unwrap();
        let b = split_classic(&d, 0.8, 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<f64> = a.0.targets.iter().chain(&a.1.targets).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, d.targets);
        assert_ne!(split_classic(&d, 0.8, 10).unwrap().0, a.0);
    }

    #[test]
    fn degenerate_splits_fail() {
        assert!(split_classic(&toy(4), 0.8, 0).is_err());
        assert!(split_classic(&toy(5), 0.99, 0).is_err());
        assert!(split_classic(&toy(5), 0.0, 0).is_err());
    }

    #[test]
    fn feature_vector_checks() {
        assert!(FeatureVector::new(vec![1.0; 59]).is_err());
        assert!(FeatureVector::new(vec![0.0; 60]).is_err());
        assert!(serde_json::from_str::<FeatureVector>("[1.0]").is_err());
    }

    #[test]
    fn standardize_roundtrip() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 5.0, 3.0], vec![2.0, 5.0, -1.0], vec![4.0, 5.0, 8.5]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = Standardizer::fit(&refs);
        assert_eq!(s.std[1], 1.0);
        for r in &rows {
            let back = s.invert(&s.apply(r));
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
