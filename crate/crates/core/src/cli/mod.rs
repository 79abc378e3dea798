//! Configuration files, CSV artifacts and the `run`, `verify` and `slope`
//! commands. The binary in `main.rs` is a thin argument parser over these.

mod commands;
mod config;
mod output;

pub use commands::{cmd_run, cmd_slope, cmd_verify, format_slopes, manifest, RunFlags, RunReport, VerifyReport};
pub use config::{CostKind, ExperimentConfig, ModelMode, ShockKind, CASE_STUDY};
pub use output::{
    read_regret_csv, regret_csv, sig12, summary_csv, trace_csv, BOUNDS_HEADER, SUMMARY_HEADER, TRACE_HEADER,
};
