//! File formats, configuration, worker pools, plots and the command line
//! around `popsent-core`.

pub mod cli;
pub mod config;
pub mod io;
pub mod models;
pub mod plots;
pub mod report;
pub mod vectors;
