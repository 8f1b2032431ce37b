//! Seeded experiment runner: configs, trials, reports, CSV output and sweeps.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{parse_weight, Experiment, ExperimentConfig, MechanismSpec, QueryPlan, QuerySpec};
pub use report::{write_csv, CSV_COLUMNS};
pub use run::{
    run_experiment, run_experiment_with, run_trial, SuccessReport, Tally, TrialRecord, WeightMix, Workers,
};
pub use sweep::{apply_axis, sweep, write_sweep_csv, Axis, SweepRow, Trend, SWEEP_COLUMNS};
