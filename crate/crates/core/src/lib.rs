//! Semiclassical Gross–Pitaevskii laboratory on the periodic box.
//!
//! Spectral kernels, a Strang-splitting solver for the ε-dependent equation,
//! the phase–amplitude (WKB) hierarchy, the Riccati eikonal for quadratic
//! potentials, hydrodynamic diagnostics and convergence tooling.

pub mod analysis;
pub mod cli;
pub mod eikonal;
pub mod hydro;
pub mod io;
pub mod error;
pub mod phase_amplitude;
pub mod schrodinger;
pub mod spectral;

pub use error::{Error, Result};
