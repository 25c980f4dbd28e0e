//! Simulation engine for pulsed single-photon sources built on a driven
//! two-photon Jaynes–Cummings system, with the standard Jaynes–Cummings
//! model as a baseline.
//!
//! Units: κ = 1. Rates and amplitudes are multiples of κ, times multiples
//! of 1/κ.

pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod io;
pub mod models;
mod par;
pub mod selftest;

pub use error::{Error, ErrorClass, Result};
