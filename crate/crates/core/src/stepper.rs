//! Fixed-step time integration with per-step checkpoint/restart.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::kernel::{KernelProbe, OdeSystem};
use crate::resilience::{checkpointed_step, StepCheckpoint};
use crate::rk::{rk_step, RungeKutta};
use crate::sdc::{integrate_step, Sdc, SweepTrace};
use crate::Result;

/// One step of some integrator from `state` at `t` to `t + dt`.
pub trait TimeStepper {
    fn step(
        &self,
        sys: &dyn OdeSystem,
        state: &[f64],
        t: f64,
        dt: f64,
        step: usize,
        probe: &mut dyn KernelProbe,
    ) -> Result<(Vec<f64>, SweepTrace)>;
}

impl TimeStepper for Sdc {
    fn step(
        &self,
        sys: &dyn OdeSystem,
        state: &[f64],
        t: f64,
        dt: f64,
        step: usize,
        probe: &mut dyn KernelProbe,
    ) -> Result<(Vec<f64>, SweepTrace)> {
        integrate_step(state, t, dt, &self.rule, sys, &self.policy, step, probe)
    }
}

impl TimeStepper for RungeKutta {
    fn step(
        &self,
        sys: &dyn OdeSystem,
        state: &[f64],
        t: f64,
        dt: f64,
        step: usize,
        probe: &mut dyn KernelProbe,
    ) -> Result<(Vec<f64>, SweepTrace)> {
        let next = rk_step(state, t, dt, &self.tableau, sys, step, probe)?;
        let trace = SweepTrace { accepted: true, ..Default::default() };
        Ok((next, trace))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrateOptions {
    /// Restarts allowed per step before the run is aborted.
    pub max_restarts: usize,
    /// Keep every `store_every`-th state (the final one is always kept).
    /// Zero keeps only the initial and final states.
    pub store_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { max_restarts: 3, store_every: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// One trace per step taken, stored or not.
    pub traces: Vec<SweepTrace>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    pub fn total_restarts(&self) -> usize {
        self.traces.iter().map(|t| t.restarts).sum()
    }

    pub fn capped_steps(&self) -> usize {
        self.traces.iter().filter(|t| t.capped).count()
    }
}

/// Step boundaries `t0, t0 + dt, …, t_end`; the last step is shortened when
/// `dt` does not divide the interval.
pub fn step_times(t0: f64, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("time step must be positive and finite"));
    }
    if !(t_end >= t0) {
        return Err(Error::invalid("end time must not precede start time"));
    }
    let ratio = (t_end - t0) / dt;
    let rounded = libm::round(ratio);
    let n = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) { rounded } else { libm::ceil(ratio) } as usize;
    let mut times: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    times.push(t_end);
    Ok(times)
}

/// Integrates from `t0` to `t_end`, checkpointing and (if needed) restarting
/// every step.
#[allow(clippy::too_many_arguments)]
pub fn integrate<T: TimeStepper + ?Sized>(
    stepper: &T,
    sys: &dyn OdeSystem,
    phi_0: &[f64],
    t0: f64,
    t_end: f64,
    dt: f64,
    opts: IntegrateOptions,
    probe: &mut dyn KernelProbe,
) -> Result<Trajectory> {
    if phi_0.len() != sys.dimension() {
        return Err(Error::ShapeMismatch { expected: sys.dimension(), found: phi_0.len() });
    }
    let times = step_times(t0, t_end, dt)?;
    let n_steps = times.len() - 1;
    let mut traj = Trajectory { times: vec![t0], states: vec![phi_0.to_vec()], traces: Vec::with_capacity(n_steps) };
    let mut state = phi_0.to_vec();
    for k in 0..n_steps {
        let checkpoint = StepCheckpoint::new(&state, times[k]);
        let h = times[k + 1] - times[k];
        let (next, trace) = checkpointed_step(stepper, &checkpoint, h, sys, opts.max_restarts, k, probe)?;
        state = next;
        traj.traces.push(trace);
        let last = k + 1 == n_steps;
        if last || (opts.store_every > 0 && (k + 1) % opts.store_every == 0) {
            traj.times.push(times[k + 1]);
            traj.states.push(state.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::NoProbe;
    use crate::problems::linear::LinearProblem;
    use crate::sdc::SweepPolicy;

    #[test]
    fn step_times_handles_exact_and_truncated() {
        assert_eq!(step_times(0.0, 0.0, 0.1).unwrap(), vec![0.0]);
        let t = step_times(0.0, 1.0, 0.1).unwrap();
        assert_eq!(t.len(), 11);
        assert_eq!(*t.last().unwrap(), 1.0);
        let t = step_times(0.0, 1.0, 0.3).unwrap();
        assert_eq!(t.len(), 5);
        assert!((t[3] - 0.9).abs() < 1e-15);
        assert!(step_times(1.0, 0.0, 0.1).is_err());
        assert!(step_times(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_length_interval() {
        let sdc = Sdc::new(3, SweepPolicy::Fixed(4)).unwrap();
        let sys = LinearProblem::new(1.0);
        let traj = integrate(&sdc, &sys, &[1.0], 0.5, 0.5, 0.1, IntegrateOptions::default(), &mut NoProbe).unwrap();
        assert_eq!(traj.times, vec![0.5]);
        assert_eq!(traj.states, vec![vec![1.0]]);
        assert!(traj.traces.is_empty());
    }

    #[test]
    fn exponential_to_one() {
        let sdc = Sdc::new(3, SweepPolicy::Fixed(4)).unwrap();
        let sys = LinearProblem::new(1.0);
        let traj = integrate(&sdc, &sys, &[1.0], 0.0, 1.0, 0.1, IntegrateOptions::default(), &mut NoProbe).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!((traj.final_time() - 1.0).abs() < 1e-12);
        assert!((traj.final_state()[0] - core::f64::consts::E).abs() < 1e-5);
        assert_eq!(traj.total_restarts(), 0);
    }

    #[test]
    fn store_every_thins_output() {
        let sdc = Sdc::new(3, SweepPolicy::Fixed(2)).unwrap();
        let sys = LinearProblem::new(1.0);
        let opts = IntegrateOptions { store_every: 0, ..Default::default() };
        let traj = integrate(&sdc, &sys, &[1.0], 0.0, 1.0, 0.1, opts, &mut NoProbe).unwrap();
        assert_eq!(traj.times, vec![0.0, 1.0]);
        assert_eq!(traj.traces.len(), 10);
    }
}
