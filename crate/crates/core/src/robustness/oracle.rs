//! Sub-oracles, the main oracle and ranking by enclosed volume.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robustness::scenarios::ScenarioResults;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum VolumeCriterion {
    /// Pass when `v_t / v_tot ≥ t_v`.
    Ratio { t_v: f64 },
    /// Pass when `v_t ≥ v_min`.
    Absolute { v_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "defaults::mae_max")]
    pub mae_max: f64,
    #[serde(default = "defaults::r2_min")]
    pub r2_min: f64,
    #[serde(default = "defaults::linf_max")]
    pub linf_max: f64,
    #[serde(default = "defaults::residual_gate")]
    pub residual_gate: f64,
    #[serde(default = "defaults::volume")]
    pub volume: VolumeCriterion,
}

mod defaults {
    use super::VolumeCriterion;

    pub fn mae_max() -> f64 {
        1.5
    }
    pub fn r2_min() -> f64 {
        0.8
    }
    pub fn linf_max() -> f64 {
        25.0
    }
    pub fn residual_gate() -> f64 {
        1.0
    }
    pub fn volume() -> VolumeCriterion {
        VolumeCriterion::Absolute { v_min: 1.0e-35 }
    }
}

/// Default `t_v` when ratio mode is picked without a value.
pub const DEFAULT_RATIO_T_V: f64 = 1e-3;

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            mae_max: defaults::mae_max(),
            r2_min: defaults::r2_min(),
            linf_max: defaults::linf_max(),
            residual_gate: defaults::residual_gate(),
            volume: defaults::volume(),
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let v = match self.volume {
            VolumeCriterion::Ratio { t_v } => t_v,
            VolumeCriterion::Absolute { v_min } => v_min,
        };
        let all = [self.mae_max, self.r2_min, self.linf_max, self.residual_gate, v];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("thresholds must be finite".into()));
        }
        if self.mae_max <= 0.0 || self.linf_max <= 0.0 || self.residual_gate <= 0.0 {
            return Err(Error::InvalidInput(
                "mae_max, linf_max and residual_gate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub oracle1: bool,
    pub oracle2: bool,
    pub oracle3: bool,
    pub main: bool,
    pub ranking_volume: f64,
}

pub fn run_oracles(results: &ScenarioResults, thresholds: &Thresholds) -> OracleVerdict {
    let oracle1 = results.feasibility_pass;
    let oracle2 = results.mae <= thresholds.mae_max
        && results.r2 >= thresholds.r2_min
        && results.linf_gt.max(results.linf_aug) <= thresholds.linf_max;
    let oracle3 = match thresholds.volume {
        VolumeCriterion::Ratio { t_v } => results.volume_ratio() >= t_v,
        VolumeCriterion::Absolute { v_min } => results.v_t >= v_min,
    };
    OracleVerdict {
        oracle1,
        oracle2,
        oracle3,
        main: oracle1 && oracle2 && oracle3,
        ranking_volume: results.v_t,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub name: String,
    /// 1-based rank among passing models; `None` for failures.
    pub rank: Option<usize>,
    pub main: bool,
    pub ranking_volume: f64,
}

/// Passing models by volume (largest first), then failing ones; ties and the
/// failure block are ordered by name.
pub fn rank_models<'a, I>(verdicts: I) -> Vec<RankEntry>
where
    I: IntoIterator<Item = (&'a str, &'a OracleVerdict)>,
{
    let mut all: Vec<(&str, &OracleVerdict)> = verdicts.into_iter().collect();
    all.sort_by(|(na, a), (nb, b)| match (a.main, b.main) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => b.ranking_volume.total_cmp(&a.ranking_volume).then_with(|| na.cmp(nb)),
        (false, false) => na.cmp(nb),
    });
    let mut next = 0;
    all.into_iter()
        .map(|(name, v)| RankEntry {
            name: name.to_string(),
            rank: v.main.then(|| {
                next += 1;
                next
            }),
            main: v.main,
            ranking_volume: v.ranking_volume,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results(feasible: bool, mae: f64, r2: f64, linf: f64, v_t: f64) -> ScenarioResults {
        ScenarioResults {
            feasibility_pass: feasible,
            mae,
            r2,
            linf_gt: linf,
            linf_aug: linf,
            v_t,
            v_tot: 1.0,
            log10_v_t: v_t.log10(),
            log10_v_tot: 0.0,
            d_effective: 3,
            gated: 10,
        }
    }

    fn verdict(main: bool, v: f64) -> OracleVerdict {
        OracleVerdict {
            oracle1: main,
            oracle2: main,
            oracle3: main,
            main,
            ranking_volume: v,
        }
    }

    #[test]
    fn perfect_model_passes() {
        let v = run_oracles(&results(true, 0.0, 1.0, 0.0, 1.0), &Thresholds::default());
        assert!(v.main);
    }

    #[test]
    fn infeasible_model_fails() {
        let v = run_oracles(&results(false, 0.0, 1.0, 0.0, 1.0), &Thresholds::default());
        assert!(!v.oracle1 && v.oracle2 && v.oracle3 && !v.main);
    }

    #[test]
    fn high_error_fails_oracle_two() {
        let t = Thresholds::default();
        assert!(!run_oracles(&results(true, 1.6, 0.9, 1.0, 1.0), &t).oracle2);
        assert!(!run_oracles(&results(true, 1.0, 0.7, 1.0, 1.0), &t).oracle2);
        let mut r = results(true, 1.0, 0.9, 1.0, 1.0);
        r.linf_aug = 26.0;
        assert!(!run_oracles(&r, &t).oracle2);
    }

    #[test]
    fn ratio_mode() {
        let t = Thresholds {
            volume: VolumeCriterion::Ratio { t_v: 0.5 },
            ..Default::default()
        };
        assert!(run_oracles(&results(true, 0.0, 1.0, 0.0, 0.6), &t).oracle3);
        assert!(!run_oracles(&results(true, 0.0, 1.0, 0.0, 0.4), &t).oracle3);
    }

    #[test]
    fn ranking_order() {
        let a = verdict(true, 6.39e-31);
        let b = verdict(true, 1.93e-33);
        let c = verdict(false, 1.0);
        let ranked = rank_models([("b", &b), ("c", &c), ("a", &a)]);
        let names: Vec<_> = ranked.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(ranked[0].rank, Some(1));
        assert_eq!(ranked[2].rank, None);
    }

    #[test]
    fn ties_break_by_name() {
        let v = verdict(true, 2.0);
        let ranked = rank_models([("zeta", &v), ("alpha", &v)]);
        assert_eq!(ranked[0].name, "alpha");
    }

    #[test]
    fn thresholds_toml_defaults() {
        let t: Thresholds = serde_json::from_str("{}").unwrap();
        assert_eq!(t, Thresholds::default());
        let r: Thresholds = serde_json::from_str(r#"{"volume": {"mode": "ratio", "t_v": 0.01}}"#).unwrap();
        assert_eq!(r.volume, VolumeCriterion::Ratio { t_v: 0.01 });
        assert!(serde_json::from_str::<Thresholds>(r#"{"mae": 1}"#).is_err());
    }
}
