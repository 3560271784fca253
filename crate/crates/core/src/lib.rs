//! Sampling from distributions on norm-constrained domains by spherical
//! augmentation.
//!
//! A constrained domain is mapped onto a hypersphere (or a product of
//! spheres and flat spaces); Hamiltonian or Lagrangian dynamics then run on
//! the sphere with an exact geodesic position update, and every draw is
//! mapped back with its log change-of-variables weight.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod samplers;
pub mod targets;

pub use error::{Error, Result};
