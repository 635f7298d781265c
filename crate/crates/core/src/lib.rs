//! Multipath-enhanced antenna pattern measurement, in simulation.
//!
//! Far fields are represented as truncated vector spherical harmonic (VSH)
//! series. A random multipath chamber maps VSH amplitudes to probe voltages;
//! reference antennas with known expansions calibrate that map, after which an
//! unknown antenna's expansion, radiation resistance and directivity can be
//! recovered from its probe voltages alone.
//!
//! Module layout follows the processing chain:
//!
//! - [`specfun`]: Legendre functions, spherical harmonics, spherical Hankel functions
//! - [`vsh`]: vector spherical harmonics and mode ordering
//! - [`farfield`]: synthesis, quadrature decomposition, power and directivity
//! - [`dipole`]: closed-form fields of arbitrarily oriented center-fed dipoles
//! - [`chamber`]: random multipath model, probe voltages, analytic channel
//! - [`recon`]: calibration and reconstruction
//! - [`planner`]: mode budgets, channel quality metrics, orientation search
//! - [`experiment`] and [`io`]: run configuration, pipelines and file formats

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chamber;
pub mod dipole;
mod error;
pub mod experiment;
pub mod farfield;
pub mod io;
pub mod linalg;
pub mod planner;
pub mod recon;
pub mod specfun;
pub mod vsh;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Impedance of free space in ohms.
pub const ETA0: f64 = 376.730313668;
