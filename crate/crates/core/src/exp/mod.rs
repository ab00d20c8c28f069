//! Experiment harness: configuration, scenario execution, metrics files
//! and seed-level summaries.

pub mod compare;
pub mod config;
pub mod record;
pub mod scenario;
pub mod selftest;

pub use compare::{compare_files, quantile, summarize, summary_csv, Spread, SummaryRow, SUMMARY_HEADER};
pub use config::{BudgetConfig, CartpoleConfig, ExperimentConfig, Scenario, SweepConfig};
pub use record::{read_csv, write_csv, MetricsRecord, Sidecar, HEADER, SCHEMA};
pub use scenario::{cartpole_seed, eval_seed, run_experiment, sagin_point, sweep_points, CartpoleOutcome, PointOutcome, RunOutput};
