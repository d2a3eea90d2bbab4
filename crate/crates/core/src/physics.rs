//! Vacuum pump-down equations.
//!
//! The chamber is treated as a single lumped volume `V_c` with a constant
//! gas load `Q = Q_l + Q_i` (leakage plus inner-surface outgassing). With a
//! constant pumping speed `S` the pressure follows
//!
//! ```text
//! P(t) = Q/S + (P0 - Q/S) * exp(-t S / V_c)
//! ```
//!
//! and, neglecting the gas load, the effective speed that explains a drop
//! from `P0` to `P_t` over `t` seconds is `S_t = (V_c / t) ln(P0 / P_t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical description of a vacuum chamber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChamberSpec {
    /// Chamber volume in m³.
    pub volume_m3: f64,
    /// Lumped leakage gas flow in mbar·m³/s.
    #[serde(default)]
    pub leak_flow: f64,
    /// Lumped inner-surface outgassing flow in mbar·m³/s.
    #[serde(default)]
    pub surface_flow: f64,
}

impl ChamberSpec {
    pub fn new(volume_m3: f64, leak_flow: f64, surface_flow: f64) -> Result<Self> {
        let chamber = Self {
            volume_m3,
            leak_flow,
            surface_flow,
        };
        chamber.validate()?;
        Ok(chamber)
    }

    /// A chamber with no gas load.
    pub fn sealed(volume_m3: f64) -> Result<Self> {
        Self::new(volume_m3, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_m3.is_finite() && self.volume_m3 > 0.0) {
            return Err(Error::Domain(format!(
                "chamber volume must be positive, got {}",
                self.volume_m3
            )));
        }
        for (name, v) in [("leak_flow", self.leak_flow), ("surface_flow", self.surface_flow)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Total gas load `Q_l + Q_i`.
    pub fn gas_load(&self) -> f64 {
        self.leak_flow + self.surface_flow
    }
}

/// One pumping event: pressure samples from pump start until pump-down time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpDownCurve {
    pub event_id: String,
    pub times_s: Vec<f64>,
    pub pressures_mbar: Vec<f64>,
    pub chamber: ChamberSpec,
}

impl PumpDownCurve {
    /// Builds a curve and checks its invariants.
    pub fn new(
        event_id: impl Into<String>,
        times_s: Vec<f64>,
        pressures_mbar: Vec<f64>,
        chamber: ChamberSpec,
    ) -> Result<Self> {
        let curve = Self {
            event_id: event_id.into(),
            times_s,
            pressures_mbar,
            chamber,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        self.chamber.validate()?;
        let id = &self.event_id;
        if self.times_s.len() != self.pressures_mbar.len() {
            return Err(Error::InvalidInput(format!(
                "event {id}: {} timestamps but {} pressures",
                self.times_s.len(),
                self.pressures_mbar.len()
            )));
        }
        if self.times_s.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "event {id}: need at least 2 samples, got {}",
                self.times_s.len()
            )));
        }
        if self.times_s[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "event {id}: first timestamp must be 0, got {}",
                self.times_s[0]
            )));
        }
        if let Some(k) = self
            .times_s
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "event {id}: timestamps not strictly increasing at sample {}",
                k + 1
            )));
        }
        if let Some(k) = self
            .pressures_mbar
            .iter()
            .position(|p| !(p.is_finite() && *p > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "event {id}: non-positive pressure {} at sample {k}",
                self.pressures_mbar[k]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    /// Initial pressure `P0`.
    pub fn initial_pressure(&self) -> f64 {
        self.pressures_mbar[0]
    }

    /// Pump-down time `T` (last timestamp).
    pub fn pump_down_time(&self) -> f64 {
        *self.times_s.last().expect("validated curve is non-empty")
    }

    pub fn min_pressure(&self) -> f64 {
        self.pressures_mbar
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Pressure at an arbitrary time, interpolating linearly in log-pressure
    /// between samples. Before the first sample the initial pressure is
    /// returned and after the last sample the final pressure is held.
    ///
    /// Log-linear interpolation is exact for piecewise-exponential curves.
    pub fn pressure_at_time(&self, t: f64) -> f64 {
        let times = &self.times_s;
        let last = times.len() - 1;
        if t <= times[0] {
            return self.pressures_mbar[0];
        }
        if t >= times[last] {
            return self.pressures_mbar[last];
        }
        // first index with times[idx] > t; idx in 1..=last
        let idx = times.partition_point(|&x| x <= t);
        let (t0, t1) = (times[idx - 1], times[idx]);
        let (l0, l1) = (
            self.pressures_mbar[idx - 1].ln(),
            self.pressures_mbar[idx].ln(),
        );
        let frac = (t - t0) / (t1 - t0);
        (l0 + frac * (l1 - l0)).exp()
    }

    /// Pressures at seconds `1, 2, ..., count`.
    pub fn sample_seconds(&self, count: usize) -> Vec<f64> {
        (1..=count).map(|s| self.pressure_at_time(s as f64)).collect()
    }
}

/// Pressure after `t` seconds of pumping at constant speed `speed` (m³/s).
pub fn pressure_at(chamber: &ChamberSpec, p0: f64, speed: f64, t: f64) -> Result<f64> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::Domain(format!("pumping speed must be positive, got {speed}")));
    }
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::Domain(format!("initial pressure must be positive, got {p0}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let ultimate = chamber.gas_load() / speed;
    Ok(ultimate + (p0 - ultimate) * (-t * speed / chamber.volume_m3).exp())
}

/// Effective pumping speed that takes the chamber from `p0` to `p_t` in `t`
/// seconds, positive for falling pressure.
pub fn effective_speed(chamber: &ChamberSpec, p0: f64, p_t: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("elapsed time must be positive, got {t}")));
    }
    if !(p_t.is_finite() && p_t > 0.0) {
        return Err(Error::Domain(format!("pressure must be positive, got {p_t}")));
    }
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::Domain(format!("initial pressure must be positive, got {p0}")));
    }
    Ok(chamber.volume_m3 / t * (p0 / p_t).ln())
}

/// Integrates a per-step speed profile as piecewise exponential decay:
/// `P[k+1] = P[k] * exp(-speed[k] * dt / V_c)`.
///
/// The returned curve has `speed_profile.len() + 1` samples at `k * dt`.
pub fn reconstruct_curve(
    event_id: impl Into<String>,
    chamber: &ChamberSpec,
    p0: f64,
    speed_profile: &[f64],
    dt: f64,
) -> Result<PumpDownCurve> {
    chamber.validate()?;
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::Domain(format!("initial pressure must be positive, got {p0}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if speed_profile.is_empty() {
        return Err(Error::Domain("speed profile is empty".into()));
    }
    if let Some(k) = speed_profile.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Domain(format!(
            "speed profile entry {k} is negative or non-finite: {}",
            speed_profile[k]
        )));
    }

    let rate = dt / chamber.volume_m3;
    let mut times = Vec::with_capacity(speed_profile.len() + 1);
    let mut pressures = Vec::with_capacity(speed_profile.len() + 1);
    times.push(0.0);
    pressures.push(p0);
    // accumulate the exponent rather than the pressure so long profiles do not
    // compound rounding; stays positive unless the exponent underflows
    let mut decay = 0.0;
    for (k, &s) in speed_profile.iter().enumerate() {
        decay += s * rate;
        times.push((k + 1) as f64 * dt);
        pressures.push((p0 * (-decay).exp()).max(f64::MIN_POSITIVE));
    }
    PumpDownCurve::new(event_id, times, pressures, *chamber)
}
