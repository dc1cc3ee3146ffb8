//! Reaction-diffusion fronts in transversely confined media.
//!
//! The crate computes principal eigenvalues of `-Δ + αg(y) - f'(0)` and the
//! extinction threshold `α₀`, stationary transverse profiles, traveling-front
//! speeds through normalized slab problems, parabolic spreading and extinction
//! runs, and the thickness thresholds of the cortical-spreading-depression model.

pub mod csd;
pub mod discretize;
pub mod error;
pub mod fronts;
pub mod geometry;
pub mod interp;
pub mod nonlinearity;
pub mod parabolic;
pub mod profiles;
pub mod spectral;

pub mod cli;

pub use error::{Error, Result};
