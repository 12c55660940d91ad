//! Experiment recipes behind the `hypnls` binary: flat key-value configs with
//! resolution tiers, deterministic output files stamped with a config digest, and
//! the exit-code contract (0 passed, 1 check failed, 2 usage, 3 solver failure).

mod commands;
mod config;
mod output;
mod plotdata;

pub use commands::*;
pub use config::{Command, ExperimentConfig, Format, PlotKind, Tier};
pub use output::{digest_line, read_digest, write_atomic, OutputSet};
pub use plotdata::{cmd_plotdata, long_format, PlotDataReport};
