//! Configuration, experiment orchestration and serialisation.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{config_hash, parse_config, parse_config_str, Experiment, RunConfig};
pub use experiments::{run_experiment, run_sweep, Outcome, ReportRow};
pub use output::{
    parse_sample_table, read_snapshot_csv, read_snapshot_file, write_eps_trajectory, write_limit_trajectory,
    NumericTable,
};
