//! Spectral deferred correction (SDC) time integration with residual-based
//! soft-error detection, plus the pieces needed to study it under injected
//! faults: Gauss-Lobatto quadrature, an explicit Runge-Kutta baseline, a
//! deterministic bit-flip injector and two benchmark problems.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and campaign execution live in the companion `resilient-sdc-cli`
//! crate.
//!
//! Every right-hand-side evaluation is split into named *kernels*. Each
//! kernel hands its output array to a [`KernelProbe`] right after it is
//! computed; that hook is the only place where faults enter a run.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

mod error;
pub mod fault;
pub mod kernel;
pub mod problems;
pub mod quadrature;
pub mod resilience;
pub mod rk;
pub mod sdc;
pub mod stepper;

pub use error::{Error, Violation, ViolationKind};
pub use kernel::{EvalSite, KernelProbe, NoProbe, OdeSystem};
pub use quadrature::{Matrix, QuadratureRule};
pub use resilience::{ControllerConfig, StepCheckpoint};
pub use rk::{ButcherTableau, RungeKutta};
pub use sdc::{NodeSolution, Sdc, SweepPolicy, SweepTrace};
pub use stepper::{integrate, IntegrateOptions, TimeStepper, Trajectory};

pub type Result<T, E = Error> = core::result::Result<T, E>;
