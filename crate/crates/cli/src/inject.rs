//! One-shot fault experiments.
//!
//! On the surrogate a single value of one kernel's output is scaled at a
//! chosen (step, sweep, node) and the step's residual history is compared
//! with the fault-free run. On the linear problem the derivative is
//! evaluated with a different growth rate at one (sweep, node) of a single
//! step, and the error is followed sweep by sweep.

use resilient_sdc::fault::{one_shot_perturbation, FaultEvent, FaultKind, OneShotSchedule};
use resilient_sdc::problems::{linear_exact, LinearPerturbation, LinearProblem};
use resilient_sdc::sdc::{predictor, residual_max_norm, sdc_sweep, NodeSolution};
use resilient_sdc::{NoProbe, QuadratureRule, SweepTrace, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::problem::Problem;
use crate::run::{integrate_config, metrics_for, RunMetrics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneShotReport {
    pub schedule_step: usize,
    pub schedule_sweep: usize,
    pub schedule_node: usize,
    pub kernel: String,
    pub fired: bool,
    pub warning: Option<String>,
    pub baseline: RunMetrics,
    pub perturbed: RunMetrics,
    /// Residual history of the scheduled step, fault-free.
    pub baseline_residuals: Vec<f64>,
    /// Residual history of the scheduled step as finally accepted.
    pub perturbed_residuals: Vec<f64>,
    pub baseline_sweeps: Option<usize>,
    pub perturbed_sweeps: Option<usize>,
    /// Residual right after the faulty sweep over the fault-free final
    /// residual of the same step.
    pub spike_ratio: Option<f64>,
    #[serde(skip)]
    pub event: Option<FaultEvent>,
    #[serde(skip)]
    pub baseline_traces: Vec<SweepTrace>,
    #[serde(skip)]
    pub perturbed_traces: Vec<SweepTrace>,
}

/// Runs `cfg` fault-free and again with `kind` applied once at `schedule`.
pub fn one_shot_study(cfg: &RunConfig, schedule: OneShotSchedule, kind: FaultKind) -> Result<OneShotReport, CliError> {
    cfg.validate_numerics()?;
    let problem = Problem::from_config(cfg);
    let baseline = integrate_config(cfg, &problem, &mut NoProbe)?;
    let mut hook = one_shot_perturbation(schedule.clone(), kind);
    let perturbed = integrate_config(cfg, &problem, &mut hook)?;
    let step_trace = |o: &Result<Trajectory, _>| o.as_ref().ok().and_then(|t| t.traces.get(schedule.step).cloned());
    let (bt, pt) = (step_trace(&baseline), step_trace(&perturbed));
    let spike_ratio = match (&bt, &pt) {
        (Some(b), Some(p)) if hook.fired() && p.restarts == 0 => {
            let post = p.residual_maxnorms.get(schedule.sweep - 1).copied();
            let base = b.residual_maxnorms.last().copied();
            post.zip(base).map(|(post, base)| post / base)
        }
        _ => None,
    };
    let traces = |o: &Result<Trajectory, _>| o.as_ref().map(|t| t.traces.clone()).unwrap_or_default();
    Ok(OneShotReport {
        schedule_step: schedule.step,
        schedule_sweep: schedule.sweep,
        schedule_node: schedule.node,
        kernel: schedule.kernel.clone(),
        fired: hook.fired(),
        warning: hook.warning(),
        baseline: metrics_for(cfg, &problem, &baseline, 0),
        perturbed: metrics_for(cfg, &problem, &perturbed, usize::from(hook.fired())),
        baseline_residuals: bt.as_ref().map(|t| t.residual_maxnorms.clone()).unwrap_or_default(),
        perturbed_residuals: pt.as_ref().map(|t| t.residual_maxnorms.clone()).unwrap_or_default(),
        baseline_sweeps: bt.map(|t| t.sweeps_taken),
        perturbed_sweeps: pt.map(|t| t.sweeps_taken),
        spike_ratio,
        event: hook.event().cloned(),
        baseline_traces: traces(&baseline),
        perturbed_traces: traces(&perturbed),
    })
}

/// Error history of one linear step under a one-time change of growth rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCurve {
    /// Growth rate used for the perturbed evaluation.
    pub s: f64,
    /// Max over nodes of the distance to the analytic solution, per sweep.
    pub errors: Vec<f64>,
    /// Max over nodes of the distance to the unperturbed collocation solution.
    pub collocation_errors: Vec<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPerturbationSetup {
    pub lambda: f64,
    pub dt: f64,
    pub num_nodes: usize,
    pub sweeps: usize,
    pub sweep: usize,
    /// Zero-based node index; node 0 is the step's initial value.
    pub node: usize,
}

impl Default for LinearPerturbationSetup {
    fn default() -> Self {
        LinearPerturbationSetup { lambda: 1.0, dt: 0.25, num_nodes: 3, sweeps: 20, sweep: 3, node: 1 }
    }
}

/// Sweeps used to reach the collocation solution of the unperturbed step.
const COLLOCATION_SWEEPS: usize = 64;

fn sweep_history(
    sys: &LinearProblem,
    rule: &QuadratureRule,
    dt: f64,
    sweeps: usize,
) -> Result<Vec<NodeSolution>, CliError> {
    let mut sol = predictor(&[1.0], rule, sys, 0.0, dt, 0, &mut NoProbe)?;
    let mut out = Vec::with_capacity(sweeps);
    out.push(sol.clone());
    for k in 2..=sweeps {
        sol = sdc_sweep(&sol, rule, sys, k, 0, &mut NoProbe)?;
        out.push(sol.clone());
    }
    Ok(out)
}

fn node_max_diff(sol: &NodeSolution, reference: impl Fn(usize) -> f64) -> f64 {
    sol.node_states.iter().enumerate().fold(0.0, |m, (i, s)| f64::max(m, (s[0] - reference(i)).abs()))
}

/// One step of `y' = λ y` from `y(0) = 1` for each growth rate in `scales`.
pub fn linear_perturbation_study(setup: &LinearPerturbationSetup, scales: &[f64]) -> Result<Vec<PerturbationCurve>, CliError> {
    if setup.sweep < 1 || setup.node >= setup.num_nodes || setup.sweeps < setup.sweep {
        return Err(CliError::Config("perturbation sweep/node outside the iteration".into()));
    }
    let rule = QuadratureRule::lobatto(setup.num_nodes).map_err(|e| CliError::Config(e.to_string()))?;
    let clean = LinearProblem::new(setup.lambda);
    let colloc = sweep_history(&clean, &rule, setup.dt, COLLOCATION_SWEEPS)?.pop().expect("non-empty");
    let mut curves = Vec::with_capacity(scales.len());
    for &s in scales {
        let sys = LinearProblem::new(setup.lambda).with_perturbation(LinearPerturbation {
            step: 0,
            sweep: setup.sweep,
            node: setup.node,
            s,
        });
        let hist = sweep_history(&sys, &rule, setup.dt, setup.sweeps)?;
        let exact = |i: usize| linear_exact(setup.dt * rule.nodes[i], setup.lambda, 1.0);
        curves.push(PerturbationCurve {
            s,
            errors: hist.iter().map(|h| node_max_diff(h, exact)).collect(),
            collocation_errors: hist.iter().map(|h| node_max_diff(h, |i| colloc.node_states[i][0])).collect(),
            residuals: hist.iter().map(|h| residual_max_norm(h, &rule)).collect::<Result<_, _>>()?,
        });
    }
    Ok(curves)
}
