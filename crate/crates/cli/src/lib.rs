//! Command-line front end: experiment configs, training runs, sweeps and
//! reports.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;
pub mod sweep;
