//! Experiment files, exporters and the `bayesopt` command line on top of
//! [`bayesopt_core`].

pub mod cli;
pub mod export;
pub mod objective;
pub mod store;
