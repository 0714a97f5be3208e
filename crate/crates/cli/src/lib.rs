//! Command-line front end for `heterojive`: synthetic data generation,
//! joint subspace estimation from CSV views, view weights and simulation
//! grids.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, CliResult};
