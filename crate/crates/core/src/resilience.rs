//! Soft-error mitigation: residual-ratio acceptance, a sweep cap, and
//! checkpoint/restart of a whole step when a state becomes non-realizable.
//!
//! After each correction sweep `n ≥ 2` the controller forms
//!
//! ```text
//! r1     = max|R_n| / max|R_1|
//! r_prev = max|R_n| / max|R_{n-1}|
//! ```
//!
//! and accepts the step once `r1` is small (the residual has dropped far
//! below the predictor's) and `r_prev` is close to one (the iteration has
//! stalled at its floor). A corrupted derivative value shows up as a jump in
//! the residual, which keeps the step sweeping until the damage is damped
//! out or the cap is reached.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Violation};
use crate::kernel::{KernelProbe, OdeSystem};
use crate::sdc::SweepTrace;
use crate::stepper::TimeStepper;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Accept only once `r1` is below this.
    pub r1_tol: f64,
    /// Accept only once `r_prev` is above this.
    pub ratio_tol: f64,
    /// Sweep cap, predictor included; reaching it accepts the step.
    pub max_sweeps: usize,
    pub min_sweeps: usize,
    pub max_restarts: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { r1_tol: 1e-5, ratio_tol: 0.9, max_sweeps: 8, min_sweeps: 2, max_restarts: 3 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r1_tol > 0.0 && self.r1_tol < 1.0) {
            return Err(Error::invalid(format!("r1_tol must lie in (0, 1), got {}", self.r1_tol)));
        }
        if !(self.ratio_tol > 0.0 && self.ratio_tol < 1.0) {
            return Err(Error::invalid(format!("ratio_tol must lie in (0, 1), got {}", self.ratio_tol)));
        }
        if self.min_sweeps < 2 {
            return Err(Error::invalid("min_sweeps must be at least 2"));
        }
        if self.max_sweeps < self.min_sweeps {
            return Err(Error::invalid("max_sweeps must be at least min_sweeps"));
        }
        Ok(())
    }
}

/// Start-of-step copy of the solution; never exposed to the fault hook.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCheckpoint {
    pub cached_state: Vec<f64>,
    pub cached_time: f64,
}

impl StepCheckpoint {
    pub fn new(state: &[f64], time: f64) -> Self {
        StepCheckpoint { cached_state: state.to_vec(), cached_time: time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Continue,
}

/// What an integrator should do after a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Continue,
    Accept,
    /// Accepted because the sweep cap was reached, not because the
    /// residual test passed.
    AcceptCapped,
}

/// `(r1, r_prev)` from the recorded residual max-norms.
///
/// A zero denominator gives a zero ratio.
pub fn residual_ratios(trace: &SweepTrace) -> Result<(f64, f64)> {
    ratios_of(&trace.residual_maxnorms)
}

fn ratios_of(norms: &[f64]) -> Result<(f64, f64)> {
    let n = norms.len();
    if n < 2 {
        return Err(Error::InsufficientHistory(n));
    }
    let latest = norms[n - 1];
    let ratio = |den: f64| if den == 0.0 { 0.0 } else { latest / den };
    Ok((ratio(norms[0]), ratio(norms[n - 2])))
}

/// The acceptance predicate.
pub fn should_continue(r1: f64, r_prev: f64, sweeps_taken: usize, cfg: &ControllerConfig) -> Decision {
    let converged = r1 < cfg.r1_tol && r_prev > cfg.ratio_tol && sweeps_taken >= cfg.min_sweeps;
    if converged || sweeps_taken >= cfg.max_sweeps {
        Decision::Accept
    } else {
        Decision::Continue
    }
}

/// Controller decision given the residual max-norms recorded so far.
///
/// A predictor residual of exactly zero means the predictor already is the
/// collocation solution, and the step is accepted immediately.
pub fn controller_decision(norms: &[f64], cfg: &ControllerConfig) -> StepDecision {
    let sweeps = norms.len();
    if norms.first() == Some(&0.0) {
        return StepDecision::Accept;
    }
    let passed = match ratios_of(norms) {
        Ok((r1, r_prev)) => {
            let cfg_uncapped = ControllerConfig { max_sweeps: usize::MAX, ..cfg.clone() };
            should_continue(r1, r_prev, sweeps, &cfg_uncapped) == Decision::Accept
        }
        Err(_) => false,
    };
    if passed {
        StepDecision::Accept
    } else if sweeps >= cfg.max_sweeps {
        StepDecision::AcceptCapped
    } else {
        StepDecision::Continue
    }
}

/// Bounds and finiteness check of `state` against the system's limits.
pub fn realizability_guard<S: OdeSystem + ?Sized>(state: &[f64], sys: &S) -> core::result::Result<(), Violation> {
    sys.check_realizable(state)
}

/// Advances one step from `checkpoint`, restarting from the cached state
/// whenever the attempt fails with a non-realizable state.
///
/// The probe is not rewound between attempts, so a retry sees whatever
/// fault timing the probe's own counters dictate.
pub fn checkpointed_step<T>(
    stepper: &T,
    checkpoint: &StepCheckpoint,
    dt: f64,
    sys: &dyn OdeSystem,
    max_restarts: usize,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<(Vec<f64>, SweepTrace)>
where
    T: TimeStepper + ?Sized,
{
    let mut last = None;
    for attempt in 0..=max_restarts {
        let start = checkpoint.cached_state.clone();
        let outcome = stepper
            .step(sys, &start, checkpoint.cached_time, dt, step, probe)
            .and_then(|(state, trace)| match realizability_guard(&state, sys) {
                Ok(()) => Ok((state, trace)),
                Err(violation) => Err(Error::NonRealizable { step, sweep: trace.sweeps_taken, node: 0, violation }),
            });
        match outcome {
            Ok((state, mut trace)) => {
                trace.restarts = attempt;
                return Ok((state, trace));
            }
            Err(Error::NonRealizable { violation, .. }) => last = Some(violation),
            Err(other) => return Err(other),
        }
    }
    Err(Error::Unrecoverable {
        step,
        restarts: max_restarts,
        last: last.expect("at least one attempt ran"),
    })
}
