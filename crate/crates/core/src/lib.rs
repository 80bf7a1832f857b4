//! Stationary states of phase-field-crystal energies by pseudospectral
//! discretization and accelerated proximal gradient minimization.

pub mod cli;
pub mod error;
pub mod gradflow;
pub mod models;
pub mod optim;
pub mod phases;
pub mod spectral;

pub use error::{Error, Result};
