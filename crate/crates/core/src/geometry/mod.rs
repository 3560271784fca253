//! Bijections between constrained domains and the sphere, their
//! log-Jacobians, and metric quantities.

pub mod chart;
pub mod constraint;
pub mod functional;
pub mod metric;
pub mod norms;
pub mod sphere;

pub use chart::{Chart, Coordinates, Mapped};
pub use constraint::{Block, ConstraintSpec};
pub use functional::{LinearMap, QuadraticMap, Side};
