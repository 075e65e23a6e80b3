//! Config-driven multi-seed experiments and their reports.

pub mod compare;
pub mod config;
pub mod reference;
pub mod report;
pub mod run;
pub mod suite;

pub use compare::{compare_scores, cross_metric_comparison, CrossMetricComparison, MetricAgreement};
pub use config::{BehaviorSpec, CandidateSuiteSpec, ExperimentConfig, MdpSource, QSource};
pub use report::{emit_report, load_report, write_report, write_tidy_csv, ReportFormat};
pub use run::{
    run_experiment, run_experiment_with, AggStat, AggregateReport, EstimateSource, EstimatorAggregate, Experiment,
    ReportProvenance, RunOptions, SeedResult, SimulatedEstimates,
};
pub use suite::{build_candidate_suite, suite_stream, BEHAVIOR_ID};
