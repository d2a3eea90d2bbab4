//! Residual metrics. Sums use a fixed pairwise reduction tree so results do
//! not depend on how many threads evaluate them.

use crate::error::{Error, Result};

const LEAF: usize = 64;
const PAR_THRESHOLD: usize = 1 << 14;

/// Pairwise summation with a split tree fixed by the input length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (a, b) = xs.split_at(mid);
    if xs.len() >= PAR_THRESHOLD {
        let (sa, sb) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        sa + sb
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one pair".into()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn metric_mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual)?;
    let abs: Vec<f64> = predicted.iter().zip(actual).map(|(p, a)| (a - p).abs()).collect();
    Ok(pairwise_sum(&abs) / abs.len() as f64)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn metric_r2(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    if actual.len() < 2 {
        return Err(Error::InvalidInput("R² needs at least 2 pairs".into()));
    }
    let n = actual.len() as f64;
    let mean = pairwise_sum(actual) / n;
    let res: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).collect();
    let tot: Vec<f64> = actual.iter().map(|a| (a - mean) * (a - mean)).collect();
    let ss_tot = pairwise_sum(&tot);
    if ss_tot == 0.0 {
        return Err(Error::R2Undefined);
    }
    Ok(1.0 - pairwise_sum(&res) / ss_tot)
}

/// Largest absolute error.
pub fn metric_linf(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual)?;
    Ok(predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p).abs())
        .fold(0.0, f64::max))
}
