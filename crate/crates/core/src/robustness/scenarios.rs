//! The three test scenarios: feasibility, ground-truth accuracy and enclosed
//! volume.

use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentedSet;
use crate::error::{Error, Result};
use crate::models::{Dataset, FeatureVector, Regressor};
use crate::robustness::metrics::{metric_linf, metric_mae, metric_r2};
use crate::robustness::volume::{enclosed_volume, EnclosedVolume, RANK_TOLERANCE};

fn aug_features(aug: &AugmentedSet) -> Result<Vec<FeatureVector>> {
    if aug.is_empty() {
        return Err(Error::InvalidInput("augmented set is empty".into()));
    }
    aug.samples.iter().map(|s| FeatureVector::new(s.first_minute.clone())).collect()
}

/// True when every prediction is strictly positive.
pub fn feasibility_from_predictions(predictions: &[f64]) -> bool {
    predictions.iter().all(|&p| p > 0.0)
}

/// True iff the model predicts a positive pressure for every augmented sample.
pub fn scenario_feasibility(model: &dyn Regressor, aug: &AugmentedSet) -> Result<bool> {
    let preds = model.predict_batch(&aug_features(aug)?)?;
    Ok(feasibility_from_predictions(&preds))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMetrics {
    pub mae: f64,
    pub r2: f64,
    pub linf_gt: f64,
    pub linf_aug: f64,
}

pub fn accuracy_from_predictions(
    gt_actual: &[f64],
    gt_predicted: &[f64],
    aug_actual: &[f64],
    aug_predicted: &[f64],
) -> Result<AccuracyMetrics> {
    Ok(AccuracyMetrics {
        mae: metric_mae(gt_predicted, gt_actual)?,
        r2: metric_r2(gt_actual, gt_predicted)?,
        linf_gt: metric_linf(gt_predicted, gt_actual)?,
        linf_aug: metric_linf(aug_predicted, aug_actual)?,
    })
}

/// MAE, R² and ℓ∞ over `gt_test`, plus ℓ∞ over the augmented samples against
/// their own minimum pressures.
pub fn scenario_ground_truth(
    model: &dyn Regressor,
    gt_test: &Dataset,
    aug: &AugmentedSet,
) -> Result<AccuracyMetrics> {
    let gt_pred = model.predict_batch(&gt_test.features)?;
    let aug_pred = model.predict_batch(&aug_features(aug)?)?;
    accuracy_from_predictions(&gt_test.targets, &gt_pred, &aug.targets(), &aug_pred)
}

/// Indices of samples whose absolute residual is strictly below `gate`.
pub fn gate_indices(predictions: &[f64], actual: &[f64], gate: f64) -> Vec<usize> {
    predictions
        .iter()
        .zip(actual)
        .enumerate()
        .filter(|(_, (p, a))| (*p - *a).abs() < gate)
        .map(|(i, _)| i)
        .collect()
}

pub fn volume_from_predictions(aug: &AugmentedSet, predictions: &[f64], residual_gate: f64) -> Result<EnclosedVolume> {
    if !(residual_gate > 0.0 && residual_gate.is_finite()) {
        return Err(Error::InvalidInput(format!("residual gate must be positive, got {residual_gate}")));
    }
    if predictions.len() != aug.len() {
        return Err(Error::InvalidInput("one prediction per augmented sample expected".into()));
    }
    let gated = gate_indices(predictions, &aug.targets(), residual_gate);
    let points: Vec<&[f64]> = aug.samples.iter().map(|s| s.first_minute.as_slice()).collect();
    enclosed_volume(&points, &gated, RANK_TOLERANCE)
}

/// Simplex volume of the augmented inputs the model predicts within
/// `residual_gate`, against the volume of all augmented inputs in the same
/// subspace.
pub fn scenario_volume(model: &dyn Regressor, aug: &AugmentedSet, residual_gate: f64) -> Result<EnclosedVolume> {
    let preds = model.predict_batch(&aug_features(aug)?)?;
    volume_from_predictions(aug, &preds, residual_gate)
}

/// Everything the oracles look at for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResults {
    pub feasibility_pass: bool,
    pub mae: f64,
    pub r2: f64,
    pub linf_gt: f64,
    pub linf_aug: f64,
    pub v_t: f64,
    pub v_tot: f64,
    /// `log10` of the volumes; finite where the volumes underflow.
    pub log10_v_t: f64,
    pub log10_v_tot: f64,
    pub d_effective: usize,
    pub gated: usize,
}

impl ScenarioResults {
    pub fn from_parts(feasibility_pass: bool, acc: AccuracyMetrics, vol: &EnclosedVolume) -> Self {
        Self {
            feasibility_pass,
            mae: acc.mae,
            r2: acc.r2,
            linf_gt: acc.linf_gt,
            linf_aug: acc.linf_aug,
            v_t: vol.v_t,
            v_tot: vol.v_tot,
            log10_v_t: vol.ln_v_t / std::f64::consts::LN_10,
            log10_v_tot: vol.ln_v_tot / std::f64::consts::LN_10,
            d_effective: vol.d_effective,
            gated: vol.gated,
        }
    }

    /// `v_t / v_tot`, zero when either volume is zero.
    pub fn volume_ratio(&self) -> f64 {
        if self.log10_v_t == f64::NEG_INFINITY || self.log10_v_tot == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(self.log10_v_t - self.log10_v_tot)
        }
    }
}

/// Predictions of one model on a test set and on the augmented set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub results: ScenarioResults,
    pub gt_actual: Vec<f64>,
    pub gt_predicted: Vec<f64>,
    pub aug_predicted: Vec<f64>,
}

/// Runs all three scenarios, querying the model once per input set.
pub fn evaluate(
    model: &dyn Regressor,
    gt_test: &Dataset,
    aug: &AugmentedSet,
    residual_gate: f64,
) -> Result<Evaluation> {
    let gt_predicted = model.predict_batch(&gt_test.features)?;
    let aug_predicted = model.predict_batch(&aug_features(aug)?)?;
    let feasible = feasibility_from_predictions(&aug_predicted);
    let acc = accuracy_from_predictions(&gt_test.targets, &gt_predicted, &aug.targets(), &aug_predicted)?;
    let vol = volume_from_predictions(aug, &aug_predicted, residual_gate)?;
    Ok(Evaluation {
        results: ScenarioResults::from_parts(feasible, acc, &vol),
        gt_actual: gt_test.targets.clone(),
        gt_predicted,
        aug_predicted,
    })
}
