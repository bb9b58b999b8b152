//! Directed polymers in spatially correlated Gaussian environments and
//! Brownian pinning, on a lattice.
//!
//! * [`covariance`]: power-law covariance functions `Q`.
//! * [`field`]: space-time Gaussian environments by circulant embedding.
//! * [`polymer`]: transfer recursion for `Z_t`, Gibbs paths, overlaps.
//! * [`pinning`]: the deterministic pinning free energy `f(h)`.
//! * [`estimators`]: disorder-averaged curves and exponent fits.

pub mod covariance;
pub mod error;
pub mod estimators;
pub mod field;
pub mod grid;
pub mod pinning;
pub mod polymer;
pub mod rng;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
