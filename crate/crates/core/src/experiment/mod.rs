//! Experiment configuration, parallel execution and report files.

pub mod config;
pub mod run;

pub use config::{Algorithm, Dg2Params, ExperimentConfig, Mode, Rdg3Params};
pub use run::{
    cell_seed, grouping_csv, load_problems, optimization_csvs, read_runs_jsonl, run_experiment, runs_jsonl,
    trajectories_csv, write_reports, CellFailure, ExperimentOutput, Manifest, RunRecord,
};
