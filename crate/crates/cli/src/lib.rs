//! Library side of the `wigfluct` command: configs, task runner, reports.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Task};
pub use run::{pairings, run, summarize, Report, SCHEMA_VERSION};

/// Exit codes of the binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const DISCREPANCY: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const FAILURE: i32 = 3;
}

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "WIGFLUCT_THREADS";
