//! Input/output, configuration and command-line front end for the
//! `dendrite-core` solver.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod runner;
pub mod series;
pub mod sweeps;
pub mod vtk;

pub use error::{Error, Result};
