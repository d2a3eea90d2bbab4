//! Regression models that predict the minimum pressure of an event from its
//! first minute of pressure readings.
//!
//! Built-in models standardize their inputs with statistics from the training
//! rows. Predictions are never clamped: a model that predicts a non-positive
//! pressure must stay visible to the feasibility check.

mod dataset;
pub mod external;
pub mod knn;
pub mod mlp;
pub mod ridge;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dataset::{split_classic, Dataset, FeatureVector, Standardizer};
pub use external::{external_predict_batch, ExternalEndpoint};

use crate::error::{Error, Result};
use knn::Knn;
use mlp::{Mlp, MlpConfig};
use ridge::Ridge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ridge,
    Knn,
    Mlp,
    External,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Knn => "knn",
            ModelKind::Mlp => "mlp",
            ModelKind::External => "external",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(ModelKind::Ridge),
            "knn" => Ok(ModelKind::Knn),
            "mlp" => Ok(ModelKind::Mlp),
            "external" => Ok(ModelKind::External),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Named numeric hyperparameters (`lambda`, `k`, `learning_rate`, `epochs`, ...).
pub type Hyperparams = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Ridge(Ridge),
    Knn(Knn),
    Mlp {
        net: Mlp,
        target_mean: f64,
        target_std: f64,
    },
    External(ExternalEndpoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// `classic` or `aug`, or any caller-chosen tag.
    pub training_label: String,
    pub standardization: Option<Standardizer>,
}

fn param(h: &Hyperparams, name: &str, default: f64) -> f64 {
    h.get(name).copied().unwrap_or(default)
}

/// Trains a built-in model. `External` models are not trained here; wrap an
/// endpoint with [`TrainedModel::external`].
pub fn train(
    kind: ModelKind,
    data: &Dataset,
    hyperparams: &Hyperparams,
    seed: u64,
    training_label: &str,
) -> Result<TrainedModel> {
    let raw: Vec<&[f64]> = data.features.iter().map(FeatureVector::as_slice).collect();
    let scaler = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| scaler.apply(r)).collect();
    let y = &data.targets;
    let params = match kind {
        ModelKind::Ridge => ModelParams::Ridge(Ridge::fit(&x, y, param(hyperparams, "lambda", 1.0))?),
        ModelKind::Knn => {
            let k = param(hyperparams, "k", knn::DEFAULT_K as f64);
            if !(k >= 1.0 && k.fract() == 0.0) {
                return Err(Error::InvalidInput(format!("k must be a positive integer, got {k}")));
            }
            ModelParams::Knn(Knn::fit(&x, y, k as usize)?)
        }
        ModelKind::Mlp => {
            let defaults = MlpConfig::default();
            let config = MlpConfig {
                hidden: param(hyperparams, "hidden", defaults.hidden as f64) as usize,
                learning_rate: param(hyperparams, "learning_rate", defaults.learning_rate),
                epochs: param(hyperparams, "epochs", defaults.epochs as f64) as usize,
                batch_size: param(hyperparams, "batch_size", defaults.batch_size as f64) as usize,
                l2: param(hyperparams, "l2", defaults.l2),
            };
            let n = y.len() as f64;
            let target_mean = y.iter().sum::<f64>() / n;
            let sd = (y.iter().map(|t| (t - target_mean).powi(2)).sum::<f64>() / n).sqrt();
            let target_std = if sd > 0.0 { sd } else { 1.0 };
            let ys: Vec<f64> = y.iter().map(|t| (t - target_mean) / target_std).collect();
            ModelParams::Mlp {
                net: Mlp::fit(&x, &ys, &config, seed)?,
                target_mean,
                target_std,
            }
        }
        ModelKind::External => {
            return Err(Error::InvalidInput(
                "external models are trained outside this process".into(),
            ))
        }
    };
    Ok(TrainedModel {
        kind,
        params,
        training_label: training_label.to_string(),
        standardization: Some(scaler),
    })
}

/// Hyperparameter grid searched by [`train_tuned`].
pub fn default_grid(kind: ModelKind) -> Vec<Hyperparams> {
    let one = |name: &str, v: f64| Hyperparams::from([(name.to_string(), v)]);
    match kind {
        ModelKind::Ridge => [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0].iter().map(|&l| one("lambda", l)).collect(),
        ModelKind::Knn => [1.0, 3.0, 5.0, 9.0, 15.0].iter().map(|&k| one("k", k)).collect(),
        ModelKind::Mlp => [1e-3, 3e-3, 1e-2].iter().map(|&lr| one("learning_rate", lr)).collect(),
        ModelKind::External => Vec::new(),
    }
}

/// Picks the grid point with the lowest validation MAE on a seeded 80/20 split
/// of `data`, then refits on all of `data`. Ties keep the earlier grid point.
pub fn train_tuned(
    kind: ModelKind,
    data: &Dataset,
    base: &Hyperparams,
    seed: u64,
    training_label: &str,
) -> Result<(TrainedModel, Hyperparams)> {
    let grid = default_grid(kind);
    if grid.is_empty() || data.len() < 5 {
        return Ok((train(kind, data, base, seed, training_label)?, base.clone()));
    }
    let (fit, val) = split_classic(data, 0.8, seed)?;
    let mut best: Option<(f64, Hyperparams)> = None;
    for point in grid {
        let mut h = base.clone();
        h.extend(point);
        let model = train(kind, &fit, &h, seed, training_label)?;
        let preds = model.predict_batch(&val.features)?;
        let mae = preds.iter().zip(&val.targets).map(|(p, t)| (p - t).abs()).sum::<f64>()
            / val.len() as f64;
        if best.as_ref().is_none_or(|(b, _)| mae < *b) {
            best = Some((mae, h));
        }
    }
    let (_, chosen) = best.expect("grid is non-empty");
    Ok((train(kind, data, &chosen, seed, training_label)?, chosen))
}

impl TrainedModel {
    pub fn external(endpoint: ExternalEndpoint, training_label: &str) -> Self {
        Self {
            kind: ModelKind::External,
            params: ModelParams::External(endpoint),
            training_label: training_label.to_string(),
            standardization: None,
        }
    }

    fn predict_builtin(&self, input: &FeatureVector) -> f64 {
        let x = match &self.standardization {
            Some(s) => s.apply(input.as_slice()),
            None => input.as_slice().to_vec(),
        };
        match &self.params {
            ModelParams::Ridge(m) => m.predict(&x),
            ModelParams::Knn(m) => m.predict(&x),
            ModelParams::Mlp {
                net,
                target_mean,
                target_std,
            } => net.forward(&x) * target_std + target_mean,
            ModelParams::External(_) => unreachable!("handled by caller"),
        }
    }

    pub fn predict(&self, input: &FeatureVector) -> Result<f64> {
        Ok(self.predict_batch(std::slice::from_ref(input))?[0])
    }

    pub fn predict_batch(&self, inputs: &[FeatureVector]) -> Result<Vec<f64>> {
        if let ModelParams::External(endpoint) = &self.params {
            return external_predict_batch(endpoint, inputs);
        }
        Ok(inputs.par_iter().map(|f| self.predict_builtin(f)).collect())
    }
}

/// Anything that maps feature vectors to pressure predictions.
pub trait Regressor: Sync {
    fn predict_batch(&self, inputs: &[FeatureVector]) -> Result<Vec<f64>>;
}

impl Regressor for TrainedModel {
    fn predict_batch(&self, inputs: &[FeatureVector]) -> Result<Vec<f64>> {
        TrainedModel::predict_batch(self, inputs)
    }
}

/// Wraps a plain function as a [`Regressor`]; handy for rigged test models.
pub struct FnRegressor<F>(pub F);

impl<F> Regressor for FnRegressor<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn predict_batch(&self, inputs: &[FeatureVector]) -> Result<Vec<f64>> {
        Ok(inputs.iter().map(|f| (self.0)(f.as_slice())).collect())
    }
}
