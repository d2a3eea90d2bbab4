//! Ground-truth event files and the synthetic corpus generator.
//!
//! Each event is one CSV file with header `time_s,pressure_mbar`. Pressures
//! are written with 9 significant digits; timestamps use the shortest
//! representation that parses back to the same value.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::physics::{reconstruct_curve, ChamberSpec, PumpDownCurve};
use crate::rng::{domain, stream_rng};

pub const CSV_HEADER: &str = "time_s,pressure_mbar";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest pump-down time the generator emits, in seconds.
pub const MIN_SYNTH_DURATION_S: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSet {
    pub curves: Vec<PumpDownCurve>,
    pub label: String,
}

impl GroundTruthSet {
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

/// Rounds a pressure to the 9 significant digits used on disk.
pub fn round_pressure(p: f64) -> f64 {
    format_pressure(p).parse().expect("formatted float parses")
}

fn format_pressure(p: f64) -> String {
    format!("{p:.8e}")
}

pub fn write_curve_csv(curve: &PumpDownCurve, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(24 * curve.len() + 32);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (t, p) in curve.times_s.iter().zip(&curve.pressures_mbar) {
        out.push_str(&format!("{t},{}\n", format_pressure(*p)));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes one `<event_id>.csv` per curve into `dir`, creating it if needed.
pub fn write_curves(curves: &[PumpDownCurve], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    curves
        .par_iter()
        .try_for_each(|c| write_curve_csv(c, &dir.join(format!("{}.csv", c.event_id))))
}

/// Parses one event file.
pub fn load_curve(path: &Path, chamber: ChamberSpec) -> Result<PumpDownCurve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let invalid = |line: usize, message: String| Error::Validation {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "time_s" || &headers[1] != "pressure_mbar" {
        return Err(parse_err(1, format!("expected header `{CSV_HEADER}`")));
    }

    let mut times = Vec::new();
    let mut pressures = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", record.len())));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad time `{}`", &record[0])))?;
        let p: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad pressure `{}`", &record[1])))?;
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(line, format!("pressure must be positive, got {p}")));
        }
        if !t.is_finite() {
            return Err(invalid(line, format!("time must be finite, got {t}")));
        }
        match times.last() {
            None if t != 0.0 => {
                return Err(invalid(line, format!("first timestamp must be 0, got {t}")));
            }
            Some(&prev) if t <= prev => {
                return Err(invalid(
                    line,
                    format!("timestamps must strictly increase ({t} after {prev})"),
                ));
            }
            _ => {}
        }
        times.push(t);
        pressures.push(p);
    }
    if times.len() < 2 {
        return Err(invalid(
            times.len() + 1,
            format!("need at least 2 samples, got {}", times.len()),
        ));
    }
    let event_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    PumpDownCurve::new(event_id, times, pressures, chamber)
}

/// Loads a single event file, or every `*.csv` in a directory (sorted by name).
pub fn load_ground_truth(path: &Path, chamber: ChamberSpec) -> Result<GroundTruthSet> {
    chamber.validate()?;
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::NoEvents(path.to_path_buf()));
    }
    let curves = files
        .par_iter()
        .map(|f| load_curve(f, chamber))
        .collect::<Result<Vec<_>>>()?;
    let label = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ground-truth".into());
    Ok(GroundTruthSet { curves, label })
}

/// Parameters of a synthetic ground-truth corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub n_events: usize,
    pub p0_mean: f64,
    pub p0_std: f64,
    pub t_mean: f64,
    pub t_std: f64,
    pub chamber: ChamberSpec,
    /// Number of distinct base speed shapes.
    pub speed_archetypes: usize,
    /// Relative multiplicative noise on pressures.
    pub noise_rel: f64,
    pub seed: u64,
    /// Mean pumping rate `S / V_c` in 1/s, averaged over an event.
    #[serde(default = "default_pump_rate")]
    pub pump_rate_per_s: f64,
    /// Relative spread of the per-event speed scale.
    #[serde(default = "default_speed_scale_std")]
    pub speed_scale_std: f64,
    /// Sampling cadence in seconds.
    #[serde(default = "default_sample_interval")]
    pub sample_interval_s: f64,
    #[serde(default = "default_label")]
    pub label: String,
}

fn default_pump_rate() -> f64 {
    0.016
}

fn default_speed_scale_std() -> f64 {
    0.05
}

fn default_sample_interval() -> f64 {
    1.0
}

fn default_label() -> String {
    "synthetic".into()
}

impl Default for SyntheticCorpusSpec {
    /// Furnace-scale defaults: P0 = 1000 ± 16.84 mbar, T = 333.59 ± 262.52 s.
    fn default() -> Self {
        Self {
            n_events: 200,
            p0_mean: 1000.0,
            p0_std: 16.84,
            t_mean: 333.59,
            t_std: 262.52,
            chamber: ChamberSpec {
                volume_m3: 10.0,
                leak_flow: 0.0,
                surface_flow: 0.0,
            },
            speed_archetypes: 3,
            noise_rel: 0.002,
            seed: 0,
            pump_rate_per_s: default_pump_rate(),
            speed_scale_std: default_speed_scale_std(),
            sample_interval_s: default_sample_interval(),
            label: default_label(),
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        self.chamber.validate()?;
        if self.n_events == 0 {
            return bad("n_events must be positive".into());
        }
        if self.speed_archetypes == 0 {
            return bad("speed_archetypes must be positive".into());
        }
        for (name, v) in [
            ("p0_mean", self.p0_mean),
            ("p0_std", self.p0_std),
            ("t_mean", self.t_mean),
            ("t_std", self.t_std),
            ("noise_rel", self.noise_rel),
            ("pump_rate_per_s", self.pump_rate_per_s),
            ("speed_scale_std", self.speed_scale_std),
            ("sample_interval_s", self.sample_interval_s),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.p0_std < 0.0 || self.t_std < 0.0 || self.speed_scale_std < 0.0 {
            return bad("standard deviations must be non-negative".into());
        }
        if self.t_mean <= 0.0 {
            return bad(format!("t_mean must be positive, got {}", self.t_mean));
        }
        if !(0.0..0.1).contains(&self.noise_rel) {
            return bad(format!("noise_rel must be in [0, 0.1), got {}", self.noise_rel));
        }
        if self.pump_rate_per_s <= 0.0 || self.sample_interval_s <= 0.0 {
            return bad("pump rate and sample interval must be positive".into());
        }
        if self.speed_scale_std >= 0.3 {
            return bad("speed_scale_std must be below 0.3".into());
        }
        if upper_tail(self.p0_mean, self.p0_std, 0.0) < 1e-6 {
            return bad("P0 distribution has almost no mass above 0".into());
        }
        if upper_tail(self.t_mean, self.t_std, MIN_SYNTH_DURATION_S) < 1e-6 {
            return bad(format!(
                "T distribution has almost no mass above {MIN_SYNTH_DURATION_S} s"
            ));
        }
        Ok(())
    }
}

/// P(X ≥ bound) for X ~ N(mean, std).
fn upper_tail(mean: f64, std: f64, bound: f64) -> f64 {
    if std == 0.0 {
        return if mean >= bound { 1.0 } else { 0.0 };
    }
    Normal::new(mean, std).map_or(0.0, |n| n.sf(bound))
}

/// A smooth logistic-decay speed shape over normalized time `u ∈ [0, 1]`,
/// scaled to unit mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedArchetype {
    pub steepness: f64,
    pub midpoint: f64,
    pub floor: f64,
    pub rate_scale: f64,
    norm: f64,
}

impl SpeedArchetype {
    /// Deterministic shape family; index `a` always yields the same shape.
    pub fn nth(a: usize) -> Self {
        const BASE: [(f64, f64, f64, f64); 3] = [
            (6.0, 0.35, 0.25, 1.0),
            (9.0, 0.55, 0.15, 0.8),
            (4.0, 0.20, 0.35, 1.25),
        ];
        let (steepness, midpoint, floor, rate_scale) = if a < BASE.len() {
            BASE[a]
        } else {
            let g = |m: f64| (a as f64 * m).fract();
            (
                4.0 + 6.0 * g(0.618_034),
                0.15 + 0.5 * g(0.414_214),
                0.10 + 0.30 * g(0.732_051),
                0.75 + 0.5 * g(0.236_068),
            )
        };
        Self::new(steepness, midpoint, floor, rate_scale)
    }

    pub fn new(steepness: f64, midpoint: f64, floor: f64, rate_scale: f64) -> Self {
        let mut shape = Self {
            steepness,
            midpoint,
            floor,
            rate_scale,
            norm: 1.0,
        };
        let n = 4096;
        shape.norm = (0..n).map(|i| shape.raw((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        shape
    }

    fn raw(&self, u: f64) -> f64 {
        self.floor + (1.0 - self.floor) / (1.0 + (self.steepness * (u - self.midpoint)).exp())
    }

    /// Shape value at normalized time `u` (unit mean over `[0, 1]`).
    pub fn eval(&self, u: f64) -> f64 {
        self.raw(u) / self.norm
    }
}

fn truncated_draw<R: Rng>(rng: &mut R, mean: f64, std: f64, lower: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = mean + std * z;
        if x >= lower {
            return x;
        }
    }
}

fn synth_event(spec: &SyntheticCorpusSpec, index: usize) -> Result<PumpDownCurve> {
    let mut rng = stream_rng(spec.seed, domain::SYNTH, index as u64);
    let p0 = truncated_draw(&mut rng, spec.p0_mean, spec.p0_std, f64::MIN_POSITIVE);
    let t = truncated_draw(&mut rng, spec.t_mean, spec.t_std, MIN_SYNTH_DURATION_S);
    let archetype = SpeedArchetype::nth(rng.random_range(0..spec.speed_archetypes));
    let scale = if spec.speed_scale_std > 0.0 {
        let z: f64 = StandardNormal.sample(&mut rng);
        (1.0 + spec.speed_scale_std * z.clamp(-3.0, 3.0)).max(0.1)
    } else {
        1.0
    };

    let dt = spec.sample_interval_s;
    let steps = ((t / dt).round() as usize).max(1);
    let level = spec.chamber.volume_m3 * spec.pump_rate_per_s * archetype.rate_scale * scale;
    let profile: Vec<f64> = (0..steps)
        .map(|k| level * archetype.eval((k as f64 + 0.5) / steps as f64))
        .collect();
    let mut curve = reconstruct_curve(
        format!("event_{index:04}"),
        &spec.chamber,
        p0,
        &profile,
        dt,
    )?;
    if spec.noise_rel > 0.0 {
        for p in curve.pressures_mbar.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p *= (1.0 + spec.noise_rel * z).max(0.5);
        }
        // the event stops at its minimum pressure
        let min = curve.min_pressure();
        *curve.pressures_mbar.last_mut().expect("non-empty") = min;
    }
    Ok(curve)
}

/// Generates a synthetic ground-truth corpus; deterministic for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticCorpusSpec) -> Result<GroundTruthSet> {
    spec.validate()?;
    let curves = (0..spec.n_events)
        .into_par_iter()
        .map(|i| synth_event(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruthSet {
        curves,
        label: spec.label.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: SyntheticCorpusSpec,
    pub seed: u64,
    pub n_events: usize,
    pub files: Vec<String>,
    pub created_at: String,
}

/// Writes a corpus plus `manifest.json` into `dir`.
pub fn write_synthetic(spec: &SyntheticCorpusSpec, gt: &GroundTruthSet, dir: &Path) -> Result<()> {
    write_curves(&gt.curves, dir)?;
    let manifest = SynthManifest {
        spec: spec.clone(),
        seed: spec.seed,
        n_events: gt.curves.len(),
        files: gt.curves.iter().map(|c| format!("{}.csv", c.event_id)).collect(),
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}
