//! Configuration, execution and output for the `dephasing` command-line tool.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
