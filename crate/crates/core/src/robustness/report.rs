//! Serializable robustness report and plot-ready prediction dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Hyperparams;
use crate::robustness::oracle::{rank_models, OracleVerdict, RankEntry, Thresholds};
use crate::robustness::scenarios::ScenarioResults;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub augment: u64,
    pub split: u64,
    pub model: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    /// `<model>-<regime>`, unique within a report.
    pub name: String,
    pub model: String,
    pub regime: String,
    pub hyperparams: Hyperparams,
    pub train_size: usize,
    pub test_size: usize,
    pub results: ScenarioResults,
    pub verdict: OracleVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub thresholds: Thresholds,
    pub seeds: RunSeeds,
    pub dictionary_hash: String,
    pub augmented_samples: usize,
    pub entries: Vec<ReportEntry>,
    pub ranking: Vec<RankEntry>,
}

impl RobustnessReport {
    pub fn new(
        thresholds: Thresholds,
        seeds: RunSeeds,
        dictionary_hash: String,
        augmented_samples: usize,
        entries: Vec<ReportEntry>,
    ) -> Self {
        let ranking = rank_models(entries.iter().map(|e| (e.name.as_str(), &e.verdict)));
        Self {
            thresholds,
            seeds,
            dictionary_hash,
            augmented_samples,
            entries,
            ranking,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes `actual,predicted` rows for a scatter plot.
pub fn write_plot_csv(path: &Path, actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::InvalidInput("actual and predicted differ in length".into()));
    }
    let mut out = String::from("actual_mbar,predicted_mbar\n");
    for (a, p) in actual.iter().zip(predicted) {
        out.push_str(&format!("{a},{p}\n"));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::oracle::run_oracles;

    #[test]
    fn report_roundtrip() {
        let results = ScenarioResults {
            feasibility_pass: true,
            mae: 1.0,
            r2: 0.98,
            linf_gt: 22.12,
            linf_aug: 3.0,
            v_t: 7.48e-21,
            v_tot: 1e-10,
            log10_v_t: 7.48e-21f64.log10(),
            log10_v_tot: -10.0,
            d_effective: 4,
            gated: 50,
        };
        let t = Thresholds::default();
        let entry = ReportEntry {
            name: "ridge-aug".into(),
            model: "ridge".into(),
            regime: "aug".into(),
            hyperparams: Hyperparams::from([("lambda".to_string(), 0.1)]),
            train_size: 2000,
            test_size: 200,
            verdict: run_oracles(&results, &t),
            results,
        };
        let report = RobustnessReport::new(t, RunSeeds { augment: 1, split: 2, model: 3 }, "abc".into(), 2000, vec![entry]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        report.save(&path).unwrap();
        assert_eq!(RobustnessReport::load(&path).unwrap(), report);
        assert_eq!(report.ranking[0].rank, Some(1));

        let csv = dir.path().join("plot.csv");
        write_plot_csv(&csv, &[1.0, 2.5], &[1.1, 2.0]).unwrap();
        assert_eq!(fs::read_to_string(csv).unwrap(), "actual_mbar,predicted_mbar\n1,1.1\n2.5,2\n");
    }
}
