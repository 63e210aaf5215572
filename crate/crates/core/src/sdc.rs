//! Explicit spectral deferred corrections on Gauss-Lobatto nodes.
//!
//! A step starts with an explicit-Euler predictor across the nodes (counted
//! as sweep 1) and then applies correction sweeps
//!
//! ```text
//! φ[m+1]' = φ[m]' + Δt_m (F(φ[m]') - F(φ[m])) + Δt Σ_j S[m][j] F(φ[j])
//! ```
//!
//! where primes mark the new iterate and `Δt_m` is the node spacing. The
//! fixed point of the sweep is the collocation solution. After every sweep
//! the max-norm of the collocation residual is recorded; it is the signal
//! the resilient controller uses to detect corrupted derivative values.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Violation};
use crate::kernel::{check_finite, EvalSite, KernelProbe, OdeSystem};
use crate::quadrature::QuadratureRule;
use crate::resilience::{self, ControllerConfig, StepDecision};
use crate::Result;

/// Node values and cached derivatives for one iterate of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution {
    pub node_states: Vec<Vec<f64>>,
    pub node_rhs: Vec<Vec<f64>>,
    pub t_start: f64,
    pub dt: f64,
}

impl NodeSolution {
    pub fn final_state(&self) -> &[f64] {
        self.node_states.last().expect("at least two nodes")
    }
}

/// Per-step record of the iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTrace {
    /// Residual max-norm after each sweep; entry 0 belongs to the predictor.
    pub residual_maxnorms: Vec<f64>,
    pub sweeps_taken: usize,
    /// The step finished under its policy (always true for returned traces).
    pub accepted: bool,
    /// Accepted only because the sweep cap was hit.
    pub capped: bool,
    pub restarts: usize,
}

/// When to stop sweeping.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepPolicy {
    /// Exactly this many sweeps, the predictor included.
    Fixed(usize),
    /// Residual-ratio acceptance with a sweep cap.
    Resilient(ControllerConfig),
}

impl SweepPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            SweepPolicy::Fixed(0) => Err(Error::invalid("fixed sweep count must be at least 1")),
            SweepPolicy::Fixed(_) => Ok(()),
            SweepPolicy::Resilient(cfg) => cfg.validate(),
        }
    }

    /// Decision after the sweeps whose residual norms are `norms`.
    pub fn decide(&self, norms: &[f64]) -> StepDecision {
        match self {
            SweepPolicy::Fixed(k) if norms.len() >= *k => StepDecision::Accept,
            SweepPolicy::Fixed(_) => StepDecision::Continue,
            SweepPolicy::Resilient(cfg) => resilience::controller_decision(norms, cfg),
        }
    }
}

fn node_violation(step: usize, sweep: usize, node: usize, violation: Violation) -> Error {
    Error::NonRealizable { step, sweep, node, violation }
}

fn eval_rhs<S: OdeSystem + ?Sized>(
    sys: &S,
    state: &[f64],
    site: EvalSite,
    probe: &mut dyn KernelProbe,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; sys.dimension()];
    sys.rhs(state, &site, probe, &mut out);
    check_finite("rhs", &out).map_err(|v| node_violation(site.step, site.sweep, site.node, v))?;
    Ok(out)
}

fn site(sol_t: f64, dt: f64, rule: &QuadratureRule, step: usize, sweep: usize, node: usize) -> EvalSite {
    EvalSite { step, sweep, node, time: sol_t + dt * rule.nodes[node] }
}

/// Explicit-Euler sub-stepping across the nodes; this is sweep 1.
#[allow(clippy::too_many_arguments)]
pub fn predictor<S: OdeSystem + ?Sized>(
    phi_n: &[f64],
    rule: &QuadratureRule,
    sys: &S,
    t_start: f64,
    dt: f64,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<NodeSolution> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    if phi_n.len() != sys.dimension() {
        return Err(Error::ShapeMismatch { expected: sys.dimension(), found: phi_n.len() });
    }
    let n = rule.num_nodes();
    let mut states = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    states.push(phi_n.to_vec());
    rhs.push(eval_rhs(sys, phi_n, site(t_start, dt, rule, step, 1, 0), probe)?);
    for m in 0..n - 1 {
        let h = dt * rule.spacing(m);
        let next: Vec<f64> = states[m].iter().zip(&rhs[m]).map(|(y, f)| y + h * f).collect();
        sys.check_realizable(&next).map_err(|v| node_violation(step, 1, m + 1, v))?;
        rhs.push(eval_rhs(sys, &next, site(t_start, dt, rule, step, 1, m + 1), probe)?);
        states.push(next);
    }
    Ok(NodeSolution { node_states: states, node_rhs: rhs, t_start, dt })
}

/// One correction sweep. Node 0 is carried over untouched; every other node
/// gets a fresh state and derivative.
pub fn sdc_sweep<S: OdeSystem + ?Sized>(
    sol: &NodeSolution,
    rule: &QuadratureRule,
    sys: &S,
    sweep: usize,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<NodeSolution> {
    let n = rule.num_nodes();
    if sol.node_states.len() != n || sol.node_rhs.len() != n {
        return Err(Error::ShapeMismatch { expected: n, found: sol.node_states.len() });
    }
    let dim = sol.node_states[0].len();
    let (t0, dt) = (sol.t_start, sol.dt);
    let mut states = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    states.push(sol.node_states[0].clone());
    rhs.push(sol.node_rhs[0].clone());
    for m in 0..n - 1 {
        let h = dt * rule.spacing(m);
        let s_row = rule.s_matrix.row(m);
        let mut next = vec![0.0; dim];
        for (i, v) in next.iter_mut().enumerate() {
            let mut integral = 0.0;
            for (j, s) in s_row.iter().enumerate() {
                integral += s * sol.node_rhs[j][i];
            }
            *v = states[m][i] + h * (rhs[m][i] - sol.node_rhs[m][i]) + dt * integral;
        }
        sys.check_realizable(&next).map_err(|v| node_violation(step, sweep, m + 1, v))?;
        rhs.push(eval_rhs(sys, &next, site(t0, dt, rule, step, sweep, m + 1), probe)?);
        states.push(next);
    }
    Ok(NodeSolution { node_states: states, node_rhs: rhs, t_start: t0, dt })
}

/// Collocation residual `φ_n + Δt Σ_j Q[m][j] F_j − φ_m` at every node.
pub fn residual(sol: &NodeSolution, rule: &QuadratureRule) -> Result<Vec<Vec<f64>>> {
    let n = rule.num_nodes();
    if sol.node_states.len() != n || sol.node_rhs.len() != n {
        return Err(Error::ShapeMismatch { expected: n, found: sol.node_states.len() });
    }
    let phi_n = &sol.node_states[0];
    let mut out = Vec::with_capacity(n);
    out.push(vec![0.0; phi_n.len()]);
    for m in 1..n {
        let q_row = rule.q_matrix.row(m);
        let r = (0..phi_n.len())
            .map(|i| {
                let integral: f64 = q_row.iter().zip(&sol.node_rhs).map(|(q, f)| q * f[i]).sum();
                phi_n[i] + sol.dt * integral - sol.node_states[m][i]
            })
            .collect();
        out.push(r);
    }
    Ok(out)
}

/// Max-norm of the residual over all nodes and components.
pub fn residual_max_norm(sol: &NodeSolution, rule: &QuadratureRule) -> Result<f64> {
    Ok(residual(sol, rule)?
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Runs the predictor and sweeps until `policy` accepts, returning the
/// state at `t_start + dt` and the trace.
#[allow(clippy::too_many_arguments)]
pub fn integrate_step<S: OdeSystem + ?Sized>(
    phi_n: &[f64],
    t_start: f64,
    dt: f64,
    rule: &QuadratureRule,
    sys: &S,
    policy: &SweepPolicy,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<(Vec<f64>, SweepTrace)> {
    let (sol, trace) = integrate_step_nodes(phi_n, t_start, dt, rule, sys, policy, step, probe)?;
    Ok((sol.final_state().to_vec(), trace))
}

/// Like [`integrate_step`] but returns the full node solution.
#[allow(clippy::too_many_arguments)]
pub fn integrate_step_nodes<S: OdeSystem + ?Sized>(
    phi_n: &[f64],
    t_start: f64,
    dt: f64,
    rule: &QuadratureRule,
    sys: &S,
    policy: &SweepPolicy,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<(NodeSolution, SweepTrace)> {
    policy.validate()?;
    let mut sol = predictor(phi_n, rule, sys, t_start, dt, step, probe)?;
    let mut norms = vec![residual_max_norm(&sol, rule)?];
    loop {
        match policy.decide(&norms) {
            StepDecision::Continue => {}
            decision => {
                let trace = SweepTrace {
                    sweeps_taken: norms.len(),
                    residual_maxnorms: norms,
                    accepted: true,
                    capped: decision == StepDecision::AcceptCapped,
                    restarts: 0,
                };
                return Ok((sol, trace));
            }
        }
        let sweep = norms.len() + 1;
        sol = sdc_sweep(&sol, rule, sys, sweep, step, probe)?;
        norms.push(residual_max_norm(&sol, rule)?);
    }
}

/// SDC as a [`TimeStepper`](crate::stepper::TimeStepper).
#[derive(Debug, Clone, PartialEq)]
pub struct Sdc {
    pub rule: QuadratureRule,
    pub policy: SweepPolicy,
}

impl Sdc {
    pub fn new(num_nodes: usize, policy: SweepPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Sdc { rule: QuadratureRule::lobatto(num_nodes)?, policy })
    }
}
