//! Monte Carlo experiment harness: configuration, trial runner, validation
//! suites, and the symbol-level simulation oracle.

mod config;
mod runner;
pub mod symbol_sim;
mod validation;

pub use config::{dbm_to_watts, ConfigError, ExperimentConfig, Method};
pub use runner::{
    fmt_g9, run_scnr_cdf, run_se_sweep, run_trial, write_sweep_csv, write_trial_csv, SweepAxis,
    SweepRow, TrialRow,
};
pub use validation::{run_validation, CheckResult};
