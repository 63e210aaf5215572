//! Turns a [`RunConfig`] into a concrete system, initial state and stepper.

use resilient_sdc::problems::{linear_exact, IgnitionSurrogate, LinearProblem};
use resilient_sdc::{OdeSystem, RungeKutta, Sdc, SweepPolicy, TimeStepper};

use crate::config::{IntegratorKind, ProblemKind, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Linear { system: LinearProblem, y0: f64 },
    Ignition(IgnitionSurrogate),
}

impl Problem {
    pub fn from_config(cfg: &RunConfig) -> Self {
        match cfg.problem {
            ProblemKind::Linear => Problem::Linear { system: LinearProblem::new(cfg.linear.s), y0: cfg.linear.y0 },
            ProblemKind::Ignition => Problem::Ignition(cfg.ignition.surrogate()),
        }
    }

    pub fn system(&self) -> &dyn OdeSystem {
        match self {
            Problem::Linear { system, .. } => system,
            Problem::Ignition(p) => p,
        }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self {
            Problem::Linear { y0, .. } => vec![*y0],
            Problem::Ignition(p) => p.gaussian_hotspot(),
        }
    }

    /// The scalar a campaign summarizes: `y` for the linear problem, peak
    /// temperature for the surrogate.
    pub fn observable(&self, state: &[f64]) -> f64 {
        match self {
            Problem::Linear { .. } => state[0],
            Problem::Ignition(p) => p.peak_temperature(state),
        }
    }

    /// Analytic solution at `t`, when there is one.
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        match self {
            Problem::Linear { system, y0 } => Some(vec![linear_exact(t, system.s, *y0)]),
            Problem::Ignition(_) => None,
        }
    }

    /// Offset of the grid point to aim one-shot faults at.
    pub fn hot_spot_window(&self) -> (usize, usize) {
        match self {
            Problem::Linear { .. } => (0, 1),
            Problem::Ignition(p) => (0, p.n_grid),
        }
    }
}

/// Builds the configured integrator.
pub fn build_stepper(cfg: &RunConfig) -> Result<Box<dyn TimeStepper + Send + Sync>, CliError> {
    let sdc = |policy| Sdc::new(cfg.num_nodes, policy).map_err(|e| CliError::Config(e.to_string()));
    Ok(match cfg.integrator {
        IntegratorKind::Rk => Box::new(RungeKutta::classical()),
        IntegratorKind::SdcFixed => Box::new(sdc(SweepPolicy::Fixed(cfg.sweeps))?),
        IntegratorKind::SdcResilient => Box::new(sdc(SweepPolicy::Resilient(cfg.controller_config()))?),
    })
}
