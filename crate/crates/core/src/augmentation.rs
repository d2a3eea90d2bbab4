//! Augmented pump-down samples from a speed dictionary and the fitted P0/T
//! distributions.
//!
//! Each sample mixes a few dictionary atoms with random simplex weights,
//! draws P0 and T from truncated Gaussians bounded by the ground truth, maps
//! the normalized-time speed profile onto `[0, T]`, and integrates it as
//! piecewise exponential decay.

use std::fs;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::decomposition::{ScalarDistribution, SpeedDictionary};
use crate::error::{Error, Result};
use crate::io::{load_curve, write_curves};
use crate::physics::{reconstruct_curve, ChamberSpec, PumpDownCurve};
use crate::rng::{domain, stream_rng};

/// Number of 1 s feature samples taken from the start of a curve.
pub const FEATURE_SECONDS: usize = 60;
pub const DEFAULT_MAX_NNZ: usize = 3;
pub const AUGMENTED_MANIFEST: &str = "augmented_manifest.json";

const MIN_ACCEPTANCE: f64 = 1e-6;
const MAX_DURATION_REJECTIONS: usize = 1000;

/// Non-negative mixing weights over dictionary atoms that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseWeights {
    pub weights: Vec<f64>,
    pub nnz: usize,
}

impl SparseWeights {
    pub fn check(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        let nnz = self.weights.iter().filter(|w| **w > 0.0).count();
        if nnz != self.nnz || nnz == 0 {
            return Err(Error::InvalidInput(format!(
                "declared {} non-zeros but found {nnz}",
                self.nnz
            )));
        }
        Ok(())
    }
}

/// Draws `nnz ~ U{1..=min(max_nnz, atom_count)}` distinct atoms and gives them
/// normalized uniform weights.
pub fn sample_sparse_weights<R: Rng + ?Sized>(
    atom_count: usize,
    max_nnz: usize,
    rng: &mut R,
) -> SparseWeights {
    assert!(atom_count >= 1, "atom_count must be positive");
    let cap = max_nnz.clamp(1, atom_count);
    let nnz = rng.random_range(1..=cap);
    let picks = sample_indices(rng, atom_count, nnz);
    // open interval (0, 1] keeps every chosen weight strictly positive
    let raw: Vec<f64> = (0..nnz).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights = vec![0.0; atom_count];
    for (idx, r) in picks.iter().zip(&raw) {
        weights[idx] = r / total;
    }
    SparseWeights { weights, nnz }
}

/// Truncated-Gaussian draw on `[observed_min, observed_max]` by rejection.
///
/// Fails instead of spinning when the interval holds less than 1e-6 of the
/// Gaussian's mass.
pub fn sample_bounded_scalar<R: Rng + ?Sized>(
    dist: &ScalarDistribution,
    rng: &mut R,
) -> Result<f64> {
    let (lo, hi) = (dist.observed_min, dist.observed_max);
    if !(lo <= hi) || !dist.mean.is_finite() || !(dist.std >= 0.0) {
        return Err(Error::Sampling(format!(
            "invalid distribution mean={} std={} bounds=[{lo}, {hi}]",
            dist.mean, dist.std
        )));
    }
    if dist.std == 0.0 || lo == hi {
        let x = dist.mean.clamp(lo, hi);
        if dist.std == 0.0 && x != dist.mean {
            return Err(Error::Sampling(format!(
                "degenerate distribution at {} lies outside [{lo}, {hi}]",
                dist.mean
            )));
        }
        return Ok(x);
    }
    let normal = Normal::new(dist.mean, dist.std)
        .map_err(|e| Error::Sampling(e.to_string()))?;
    let acceptance = normal.cdf(hi) - normal.cdf(lo);
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::Sampling(format!(
            "acceptance probability {acceptance:.3e} too small for bounds [{lo}, {hi}]"
        )));
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = dist.mean + dist.std * z;
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSample {
    pub curve: PumpDownCurve,
    pub weights: SparseWeights,
    pub p0: f64,
    pub pump_down_time: f64,
    /// Prediction target.
    pub min_pressure: f64,
    /// Pressures at seconds 1..=60 (model input).
    pub first_minute: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSet {
    pub samples: Vec<AugmentedSample>,
    pub seed: u64,
    pub m: usize,
}

impl AugmentedSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.first_minute.clone()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.min_pressure).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub m: usize,
    pub seed: u64,
    pub max_nnz: usize,
}

impl AugmentOptions {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            seed,
            max_nnz: DEFAULT_MAX_NNZ,
        }
    }
}

fn augmented_sample(
    index: usize,
    dict: &SpeedDictionary,
    p0_dist: &ScalarDistribution,
    t_dist: &ScalarDistribution,
    chamber: &ChamberSpec,
    opts: &AugmentOptions,
) -> Result<AugmentedSample> {
    let mut rng = stream_rng(opts.seed, domain::AUGMENT, index as u64);
    let weights = sample_sparse_weights(dict.atom_count(), opts.max_nnz, &mut rng);
    let profile = dict.mix(&weights.weights)?;
    let p0 = sample_bounded_scalar(p0_dist, &mut rng)?;
    let mut rejections = 0;
    let t = loop {
        let t = sample_bounded_scalar(t_dist, &mut rng)?;
        if t >= FEATURE_SECONDS as f64 {
            break t;
        }
        rejections += 1;
        if rejections >= MAX_DURATION_REJECTIONS {
            return Err(Error::Sampling(format!(
                "{MAX_DURATION_REJECTIONS} consecutive pump-down times below {FEATURE_SECONDS} s"
            )));
        }
    };
    let dt = t / dict.resolution as f64;
    let curve = reconstruct_curve(format!("aug_{index:06}"), chamber, p0, &profile, dt)?;
    let first_minute = curve.sample_seconds(FEATURE_SECONDS);
    Ok(AugmentedSample {
        min_pressure: curve.min_pressure(),
        pump_down_time: t,
        curve,
        weights,
        p0,
        first_minute,
    })
}

/// Generates `opts.m` samples. Sample `i` only depends on `(seed, i)`, so the
/// result is identical for any number of worker threads.
pub fn generate_augmented(
    dict: &SpeedDictionary,
    p0_dist: &ScalarDistribution,
    t_dist: &ScalarDistribution,
    chamber: &ChamberSpec,
    opts: &AugmentOptions,
) -> Result<AugmentedSet> {
    if opts.m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    if dict.atom_count() == 0 {
        return Err(Error::InvalidInput("dictionary is empty".into()));
    }
    chamber.validate()?;
    let samples = (0..opts.m)
        .into_par_iter()
        .map(|i| augmented_sample(i, dict, p0_dist, t_dist, chamber, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(AugmentedSet {
        samples,
        seed: opts.seed,
        m: opts.m,
    })
}

/// Per-sample record in `augmented_manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub event_id: String,
    pub atoms: Vec<usize>,
    pub weights: Vec<f64>,
    pub p0: f64,
    pub pump_down_time: f64,
    pub min_pressure: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedManifest {
    pub seed: u64,
    pub m: usize,
    pub max_nnz: usize,
    pub atom_count: usize,
    pub dictionary_hash: String,
    pub p0_dist: ScalarDistribution,
    pub t_dist: ScalarDistribution,
    pub chamber: ChamberSpec,
    pub samples: Vec<SampleRecord>,
    pub created_at: String,
}

/// Writes the curves as CSV files plus `augmented_manifest.json`.
pub fn save_augmented(
    set: &AugmentedSet,
    dict: &SpeedDictionary,
    p0_dist: &ScalarDistribution,
    t_dist: &ScalarDistribution,
    chamber: &ChamberSpec,
    max_nnz: usize,
    dir: &Path,
) -> Result<()> {
    let curves: Vec<PumpDownCurve> = set.samples.iter().map(|s| s.curve.clone()).collect();
    write_curves(&curves, dir)?;
    let samples = set
        .samples
        .iter()
        .map(|s| {
            let (atoms, weights) = s
                .weights
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(i, w)| (i, *w))
                .unzip();
            SampleRecord {
                event_id: s.curve.event_id.clone(),
                atoms,
                weights,
                p0: s.p0,
                pump_down_time: s.pump_down_time,
                min_pressure: s.min_pressure,
            }
        })
        .collect();
    let manifest = AugmentedManifest {
        seed: set.seed,
        m: set.m,
        max_nnz,
        atom_count: dict.atom_count(),
        dictionary_hash: dict.content_hash(),
        p0_dist: *p0_dist,
        t_dist: *t_dist,
        chamber: *chamber,
        samples,
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    let path = dir.join(AUGMENTED_MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

/// Reads a set written by [`save_augmented`]. Curves come back at the 9-digit
/// precision of the CSV files and features are re-sampled from them.
pub fn load_augmented(dir: &Path) -> Result<(AugmentedSet, AugmentedManifest)> {
    let path = dir.join(AUGMENTED_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: AugmentedManifest = serde_json::from_str(&text)?;
    let samples = manifest
        .samples
        .par_iter()
        .map(|rec| {
            let curve = load_curve(&dir.join(format!("{}.csv", rec.event_id)), manifest.chamber)?;
            let mut weights = vec![0.0; manifest.atom_count];
            for (&i, &w) in rec.atoms.iter().zip(&rec.weights) {
                *weights.get_mut(i).ok_or_else(|| {
                    Error::InvalidInput(format!("atom index {i} out of range in {}", rec.event_id))
                })? = w;
            }
            Ok(AugmentedSample {
                first_minute: curve.sample_seconds(FEATURE_SECONDS),
                min_pressure: curve.min_pressure(),
                curve,
                weights: SparseWeights {
                    weights,
                    nnz: rec.atoms.len(),
                },
                p0: rec.p0,
                pump_down_time: rec.pump_down_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        AugmentedSet {
            samples,
            seed: manifest.seed,
            m: manifest.m,
        },
        manifest,
    ))
}
