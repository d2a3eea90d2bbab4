//! Decomposition of ground-truth pump-down events into initial-pressure and
//! pump-down-time distributions plus a dictionary of pumping-speed vectors.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::GroundTruthSet;
use crate::physics::{effective_speed, PumpDownCurve};
use crate::spline::Interpolant;

pub const DEFAULT_RESOLUTION: usize = 500;
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Gaussian fitted by maximum likelihood, plus the observed sample range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarDistribution {
    pub mean: f64,
    pub std: f64,
    pub observed_min: f64,
    pub observed_max: f64,
}

impl ScalarDistribution {
    /// A distribution that always yields `value`.
    pub fn point(value: f64) -> Self {
        Self {
            mean: value,
            std: 0.0,
            observed_min: value,
            observed_max: value,
        }
    }
}

/// Sample mean and maximum-likelihood standard deviation (divides by `n`).
pub fn fit_scalar_mle(samples: &[f64]) -> Result<ScalarDistribution> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "maximum-likelihood fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("samples must be finite".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    // rounding can push the mean of near-constant data a hair outside the range
    Ok(ScalarDistribution {
        mean: mean.clamp(lo, hi),
        std: var.sqrt(),
        observed_min: lo,
        observed_max: hi,
    })
}

/// Pumping speeds (m³/s) of one event on a normalized-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeedVector {
    pub values: Vec<f64>,
}

impl SpeedVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "speed vector entry {k} is negative or non-finite: {}",
                values[k]
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

/// Grid point `j` of a normalized-time grid with `resolution` cells: the
/// centre of cell `j`, matching the step a reconstructed profile applies it to.
pub fn grid_point(j: usize, resolution: usize) -> f64 {
    (j as f64 + 0.5) / resolution as f64
}

/// Per-interval effective speeds of a curve resampled to `resolution` points
/// of normalized time.
///
/// Each interval speed sits at the interval's midpoint (as a fraction of the
/// pump-down time). Negative speeds from upward pressure blips are clamped to
/// zero before interpolation; the interpolant is a not-a-knot cubic spline,
/// or piecewise linear for curves with fewer than four samples.
pub fn extract_speed_vector(curve: &PumpDownCurve, resolution: usize) -> Result<SpeedVector> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    curve.validate()?;
    let total = curve.pump_down_time();
    let mut knots = Vec::with_capacity(curve.len() - 1);
    let mut speeds = Vec::with_capacity(curve.len() - 1);
    for k in 0..curve.len() - 1 {
        let (t0, t1) = (curve.times_s[k], curve.times_s[k + 1]);
        let s = effective_speed(
            &curve.chamber,
            curve.pressures_mbar[k],
            curve.pressures_mbar[k + 1],
            t1 - t0,
        )?;
        knots.push(0.5 * (t0 + t1) / total);
        speeds.push(s.max(0.0));
    }
    let interp = if curve.len() < 4 {
        Interpolant::linear(&knots, &speeds)?
    } else {
        Interpolant::cubic(&knots, &speeds)?
    };
    let values = (0..resolution)
        .map(|j| interp.eval(grid_point(j, resolution)).max(0.0))
        .collect();
    Ok(SpeedVector { values })
}

/// Extracts speed vectors for every curve, in order.
pub fn extract_all(curves: &[PumpDownCurve], resolution: usize) -> Result<Vec<SpeedVector>> {
    curves
        .par_iter()
        .map(|c| extract_speed_vector(c, resolution))
        .collect()
}

/// Independent pumping-speed vectors selected from the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedDictionary {
    pub atoms: Vec<SpeedVector>,
    pub resolution: usize,
    pub epsilon: f64,
    /// Largest training residual norm before the first atom and after each
    /// atom was added.
    pub max_residual_history: Vec<f64>,
    basis: Basis,
}

impl SpeedDictionary {
    /// Rebuilds a dictionary from stored atoms (for example after loading).
    pub fn from_atoms(atoms: Vec<SpeedVector>, epsilon: f64) -> Result<Self> {
        let resolution = atoms.first().map(SpeedVector::len).ok_or_else(|| {
            Error::InvalidInput("dictionary needs at least one atom".into())
        })?;
        if atoms.iter().any(|a| a.len() != resolution) {
            return Err(Error::InvalidInput("dictionary atoms differ in length".into()));
        }
        for a in &atoms {
            SpeedVector::new(a.values.clone())?;
        }
        let mut basis = Basis::new(resolution);
        for a in &atoms {
            basis.push(&a.values);
        }
        Ok(Self {
            atoms,
            resolution,
            epsilon,
            max_residual_history: Vec::new(),
            basis,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Largest residual norm reached at termination.
    pub fn achieved_max_residual(&self) -> Option<f64> {
        self.max_residual_history.last().copied()
    }

    /// Greedy representation of `speed`: coefficients over the atoms and the
    /// norm of what the atoms cannot explain.
    pub fn represent(&self, speed: &[f64]) -> Result<(Vec<f64>, f64)> {
        if speed.len() != self.resolution {
            return Err(Error::InvalidInput(format!(
                "speed vector has length {}, dictionary resolution is {}",
                speed.len(),
                self.resolution
            )));
        }
        Ok(self.basis.represent(speed))
    }

    /// Residual norm of `speed` under the greedy representation.
    pub fn residual_norm(&self, speed: &[f64]) -> Result<f64> {
        Ok(self.represent(speed)?.1)
    }

    /// `D_s ψ`: the speed profile mixed by `weights`.
    pub fn mix(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.atoms.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} atoms",
                weights.len(),
                self.atoms.len()
            )));
        }
        let mut out = vec![0.0; self.resolution];
        for (atom, &w) in self.atoms.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(&atom.values) {
                *o += w * a;
            }
        }
        Ok(out)
    }

    /// SHA-256 over the little-endian bytes of resolution and atoms.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.resolution as u64).to_le_bytes());
        h.update((self.atoms.len() as u64).to_le_bytes());
        for a in &self.atoms {
            for v in &a.values {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// Orthonormal basis of the span of the atoms, built by Gram-Schmidt in atom
/// order. `r` holds the triangular factor (`atom_j = Σ_i r[j][i] q_i`).
#[derive(Debug, Clone, PartialEq)]
struct Basis {
    dim: usize,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl Basis {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    /// Adds a vector; returns its residual norm against the current span.
    fn push(&mut self, v: &[f64]) -> f64 {
        let mut resid = v.to_vec();
        let mut coeffs = vec![0.0; self.q.len() + 1];
        // two passes of modified Gram-Schmidt keep the basis orthogonal
        for _ in 0..2 {
            for (i, q) in self.q.iter().enumerate() {
                let c = dot(q, &resid);
                coeffs[i] += c;
                axpy(-c, q, &mut resid);
            }
        }
        let nr = norm(&resid);
        coeffs[self.q.len()] = nr;
        let q = if nr > 0.0 {
            resid.iter().map(|x| x / nr).collect()
        } else {
            vec![0.0; self.dim]
        };
        self.q.push(q);
        self.r.push(coeffs);
        nr
    }

    fn represent(&self, s: &[f64]) -> (Vec<f64>, f64) {
        let mut resid = s.to_vec();
        let mut proj = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (i, q) in self.q.iter().enumerate() {
                let c = dot(q, &resid);
                proj[i] += c;
                axpy(-c, q, &mut resid);
            }
        }
        // back-substitute R ψ = Qᵀ s
        let n = self.q.len();
        let mut psi = vec![0.0; n];
        for j in (0..n).rev() {
            let mut acc = proj[j];
            for (k, p) in psi.iter().enumerate().skip(j + 1) {
                acc -= self.r[k][j] * p;
            }
            let diag = self.r[j][j];
            psi[j] = if diag > 0.0 { acc / diag } else { 0.0 };
        }
        (psi, norm(&resid))
    }
}

/// Greedy dictionary learning.
///
/// Starting from an empty dictionary, each round represents every training
/// vector by projection onto the span of the atoms chosen so far, and adds the
/// training vector with the largest residual norm. Stops once every residual
/// is at most `epsilon` (or a numerical floor relative to the largest vector)
/// or every vector has been taken. At least one atom is always selected.
pub fn learn_dictionary(speeds: &[SpeedVector], epsilon: f64) -> Result<SpeedDictionary> {
    if speeds.is_empty() {
        return Err(Error::InvalidInput("dictionary learning needs at least one speed vector".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let dim = speeds[0].len();
    if dim == 0 || speeds.iter().any(|s| s.len() != dim) {
        return Err(Error::InvalidInput("speed vectors must share a non-zero length".into()));
    }

    let mut residuals: Vec<Vec<f64>> = speeds.iter().map(|s| s.values.clone()).collect();
    let mut norms: Vec<f64> = residuals.iter().map(|r| norm(r)).collect();
    let mut taken = vec![false; speeds.len()];
    let largest = norms.iter().copied().fold(0.0, f64::max);
    let stop = epsilon.max(1e-11 * largest);

    let mut basis = Basis::new(dim);
    let mut atoms = Vec::new();
    let mut history = vec![largest];

    loop {
        // first index wins ties, which keeps selection deterministic
        let (pick, worst) = norms
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, &n)| {
                if n > best.1 {
                    (i, n)
                } else {
                    best
                }
            });
        if pick == usize::MAX || (!atoms.is_empty() && worst <= stop) {
            break;
        }
        taken[pick] = true;
        atoms.push(speeds[pick].clone());
        let before = basis.q.len();
        basis.push(&speeds[pick].values);
        let q = basis.q[before].clone();
        if norm(&q) > 0.0 {
            residuals
                .par_iter_mut()
                .zip(norms.par_iter_mut())
                .for_each(|(r, n)| {
                    let c = dot(&q, r);
                    axpy(-c, &q, r);
                    *n = norm(r);
                });
        }
        norms[pick] = 0.0;
        let max_now = norms.iter().copied().fold(0.0, f64::max);
        history.push(max_now);
        if max_now <= stop {
            break;
        }
    }

    Ok(SpeedDictionary {
        atoms,
        resolution: dim,
        epsilon,
        max_residual_history: history,
        basis,
    })
}

/// Everything the augmentation stage needs from the ground truth.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub p0_dist: ScalarDistribution,
    pub t_dist: ScalarDistribution,
    pub dictionary: SpeedDictionary,
    pub source_label: String,
}

pub fn decompose(gt: &GroundTruthSet, resolution: usize, epsilon: f64) -> Result<Decomposition> {
    if gt.curves.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "decomposition needs at least 2 events, got {}",
            gt.curves.len()
        )));
    }
    let p0s: Vec<f64> = gt.curves.iter().map(PumpDownCurve::initial_pressure).collect();
    let ts: Vec<f64> = gt.curves.iter().map(PumpDownCurve::pump_down_time).collect();
    let speeds = extract_all(&gt.curves, resolution)?;
    let dictionary = learn_dictionary(&speeds, epsilon)?;
    log::info!(
        "dictionary: {} atoms from {} events, max residual {:.3e}",
        dictionary.atom_count(),
        speeds.len(),
        dictionary.achieved_max_residual().unwrap_or(0.0)
    );
    Ok(Decomposition {
        p0_dist: fit_scalar_mle(&p0s)?,
        t_dist: fit_scalar_mle(&ts)?,
        dictionary,
        source_label: gt.label.clone(),
    })
}

/// On-disk form of a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryFile {
    pub resolution: usize,
    pub epsilon: f64,
    pub atoms: Vec<Vec<f64>>,
    pub source_label: String,
    pub p0_dist: ScalarDistribution,
    pub t_dist: ScalarDistribution,
}

impl Decomposition {
    pub fn to_file(&self) -> DictionaryFile {
        DictionaryFile {
            resolution: self.dictionary.resolution,
            epsilon: self.dictionary.epsilon,
            atoms: self.dictionary.atoms.iter().map(|a| a.values.clone()).collect(),
            source_label: self.source_label.clone(),
            p0_dist: self.p0_dist,
            t_dist: self.t_dist,
        }
    }

    pub fn from_file(file: DictionaryFile) -> Result<Self> {
        let atoms = file
            .atoms
            .into_iter()
            .map(SpeedVector::new)
            .collect::<Result<Vec<_>>>()?;
        let dictionary = SpeedDictionary::from_atoms(atoms, file.epsilon)?;
        if dictionary.resolution != file.resolution {
            return Err(Error::InvalidInput(format!(
                "dictionary declares resolution {} but atoms have length {}",
                file.resolution, dictionary.resolution
            )));
        }
        Ok(Self {
            p0_dist: file.p0_dist,
            t_dist: file.t_dist,
            dictionary,
            source_label: file.source_label,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_str(&text)?)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
