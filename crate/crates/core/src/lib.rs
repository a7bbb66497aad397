//! Collisional decoherence of a free quantum particle computed three ways:
//! exact Gaussian closed forms, direct integration of the Joos-Zeh master
//! equation, and the marginal-wavefunction (logarithmic Schrödinger) equation.

pub mod analytic;
pub mod checkpoint;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod gfunc;
pub mod lse;
pub mod master_eq;
pub mod observables;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
