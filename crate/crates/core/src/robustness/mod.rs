//! Robustness scenarios, oracles and reporting.

pub mod metrics;
pub mod oracle;
pub mod report;
pub mod scenarios;
pub mod volume;

pub use metrics::{metric_linf, metric_mae, metric_r2};
pub use oracle::{rank_models, run_oracles, OracleVerdict, RankEntry, Thresholds, VolumeCriterion};
pub use report::{write_plot_csv, ReportEntry, RobustnessReport, RunSeeds};
pub use scenarios::{
    evaluate, scenario_feasibility, scenario_ground_truth, scenario_volume, AccuracyMetrics, Evaluation,
    ScenarioResults,
};
pub use volume::{simplex_volume, EnclosedVolume, SimplexVolume};
