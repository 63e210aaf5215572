//! Benchmark systems: the scalar linear problem and a one-dimensional
//! ignition surrogate.

pub mod ignition;
pub mod linear;
pub mod stencil;

pub use ignition::{ignition_metrics, IgnitionMetrics, IgnitionSurrogate};
pub use linear::{linear_exact, LinearPerturbation, LinearProblem};
pub use stencil::derivative_operator;
