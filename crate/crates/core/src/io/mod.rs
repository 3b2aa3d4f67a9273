//! Configuration parsing, artifact writers and the command runner used by
//! the `fockprep` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_as, Command, Figure, RunConfig};
pub use run::run;
