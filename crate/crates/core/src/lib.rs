//! Phase-field solidification core.
//!
//! Pure-melt (thermal) and dilute binary-alloy (solutal, frozen temperature)
//! phase-field models discretized with C0 bilinear/trilinear elements on a
//! uniform structured grid, explicit and semi-implicit time stepping, scenario
//! construction and the post-processing used for verification (tip tracking,
//! L2/H1 error norms, log-log rate fits).
//!
//! The crate is `no_std` + `alloc`; the `std` feature only switches the error
//! type to implement `std::error::Error`, and `parallel` (default) enables
//! rayon-backed assembly. Results are bitwise identical with and without it.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod alloy;
pub mod analysis;
pub mod anisotropy;
pub mod error;
pub mod grid;
mod kernel;
pub mod math;
pub mod params;
pub mod pure_melt;
pub mod scenarios;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{FieldState, Grid, QuadratureRule};
pub use params::{AlloyMaterial, AlloyParams, Model, PureMeltParams};
pub use scenarios::{Scenario, ScenarioKind};
pub use stepper::{Simulation, StepControl, StepMode};
