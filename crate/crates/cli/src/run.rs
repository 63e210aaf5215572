//! Single runs.

use std::path::Path;

use resilient_sdc::fault::{FaultEvent, FaultInjector, FaultMode};
use resilient_sdc::problems::ignition_metrics;
use resilient_sdc::{integrate, Error, IntegrateOptions, KernelProbe, NoProbe, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::output::{linear_rows, profile_rows, residual_rows, write_csv, write_events, write_json};
use crate::problem::{build_stepper, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Clean,
    /// Completed, with at least one step accepted at the sweep cap.
    Capped,
    /// A step ran out of restarts.
    Aborted,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Clean => exit::CLEAN,
            RunStatus::Capped => exit::CAPPED,
            RunStatus::Aborted => exit::UNRECOVERABLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub status: RunStatus,
    pub integrator: String,
    pub steps: usize,
    pub final_time: Option<f64>,
    /// Final `y` (linear) or final peak temperature (surrogate).
    pub final_value: Option<f64>,
    pub final_peak_t: Option<f64>,
    pub ignition_delay: Option<f64>,
    /// Distance to the analytic solution at the final time, when known.
    pub final_error: Option<f64>,
    pub total_sweeps: usize,
    pub restarts: usize,
    pub capped_steps: usize,
    pub fault_events: usize,
    pub abort_reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: RunMetrics,
    /// Absent when the run aborted.
    pub trajectory: Option<Trajectory>,
    pub events: Vec<FaultEvent>,
}

impl RunReport {
    pub fn status(&self) -> RunStatus {
        self.metrics.status
    }
}

/// Integrates `cfg` with an explicit probe. Only an unrecoverable step is
/// reported as `Ok(Err(..))`; anything else is a configuration problem.
pub fn integrate_config(
    cfg: &RunConfig,
    problem: &Problem,
    probe: &mut dyn KernelProbe,
) -> Result<Result<Trajectory, Error>, CliError> {
    let stepper = build_stepper(cfg)?;
    let opts = IntegrateOptions { max_restarts: cfg.max_restarts, store_every: 1 };
    let phi0 = problem.initial_state();
    match integrate(stepper.as_ref(), problem.system(), &phi0, 0.0, cfg.t_end(), cfg.dt(), opts, probe) {
        Ok(traj) => Ok(Ok(traj)),
        Err(e @ Error::Unrecoverable { .. }) => Ok(Err(e)),
        Err(e) => Err(e.into()),
    }
}

/// Summarizes an integration outcome.
pub fn metrics_for(
    cfg: &RunConfig,
    problem: &Problem,
    outcome: &Result<Trajectory, Error>,
    fault_events: usize,
) -> RunMetrics {
    let mut m = RunMetrics {
        status: RunStatus::Aborted,
        integrator: cfg.integrator.name().to_string(),
        steps: 0,
        final_time: None,
        final_value: None,
        final_peak_t: None,
        ignition_delay: None,
        final_error: None,
        total_sweeps: 0,
        restarts: 0,
        capped_steps: 0,
        fault_events,
        abort_reason: None,
    };
    let traj = match outcome {
        Ok(t) => t,
        Err(e) => {
            m.abort_reason = Some(e.to_string());
            return m;
        }
    };
    m.steps = traj.traces.len();
    m.final_time = Some(traj.final_time());
    m.final_value = Some(problem.observable(traj.final_state()));
    m.total_sweeps = traj.traces.iter().map(|t| t.sweeps_taken).sum();
    m.restarts = traj.total_restarts();
    m.capped_steps = traj.capped_steps();
    m.status = if m.capped_steps > 0 { RunStatus::Capped } else { RunStatus::Clean };
    match problem {
        Problem::Ignition(p) => {
            if let Ok(im) = ignition_metrics(traj, p.n_grid) {
                m.final_peak_t = Some(im.final_peak_t);
                m.ignition_delay = im.ignition_delay;
            }
        }
        Problem::Linear { .. } => {
            let exact = problem.exact(traj.final_time()).expect("linear problem has an exact solution");
            m.final_error = Some((traj.final_state()[0] - exact[0]).abs());
        }
    }
    m
}

/// Runs `cfg` as run `run_id` of its seed without writing any files.
pub fn simulate(cfg: &RunConfig, run_id: u64) -> Result<RunReport, CliError> {
    let problem = Problem::from_config(cfg);
    let fault_cfg = cfg.fault_config(run_id);
    let (outcome, events) = if fault_cfg.mode == FaultMode::Off {
        (integrate_config(cfg, &problem, &mut NoProbe)?, Vec::new())
    } else {
        let mut inj = FaultInjector::new(fault_cfg).map_err(|e| CliError::Config(e.to_string()))?;
        let outcome = integrate_config(cfg, &problem, &mut inj)?;
        (outcome, inj.into_events())
    };
    let metrics = metrics_for(cfg, &problem, &outcome, events.len());
    Ok(RunReport { metrics, trajectory: outcome.ok(), events })
}

/// Validates `cfg`, runs it, and writes its data files when an output
/// directory is configured.
pub fn run_single(cfg: &RunConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let report = simulate(cfg, 0)?;
    if let Some(dir) = &cfg.output_dir {
        write_run_outputs(dir, cfg, &report)?;
    }
    Ok(report)
}

/// Writes `residuals.csv`, `trajectory.csv`, `events.jsonl`, `metrics.json`
/// and the effective `config.toml` into `dir`.
pub fn write_run_outputs(dir: &Path, cfg: &RunConfig, report: &RunReport) -> Result<(), CliError> {
    let problem = Problem::from_config(cfg);
    if let Some(traj) = &report.trajectory {
        write_csv(&dir.join("residuals.csv"), residual_rows(&traj.traces))?;
        let path = dir.join("trajectory.csv");
        match &problem {
            Problem::Ignition(p) => write_csv(&path, profile_rows(p, traj.final_state()))?,
            Problem::Linear { .. } => {
                write_csv(&path, linear_rows(traj, |t| problem.exact(t).expect("exact solution")[0]))?
            }
        }
    }
    write_events(&dir.join("events.jsonl"), 0, &report.events)?;
    write_json(&dir.join("metrics.json"), &report.metrics)?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(CliError::io(path))
}
