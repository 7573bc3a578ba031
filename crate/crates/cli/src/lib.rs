//! Front end of the `mpass` binary: argument parsing, solve and sweep
//! orchestration, report files and the corpus benchmark.

pub mod commands;
pub mod config;
pub mod report;
pub mod suite;

pub use commands::{with_workers, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK};
pub use config::Cli;
