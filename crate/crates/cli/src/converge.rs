//! Observed order of accuracy under step refinement.

use resilient_sdc::{integrate, IntegrateOptions, NoProbe, RungeKutta, Sdc, SweepPolicy, TimeStepper};
use serde::{Deserialize, Serialize};

use crate::config::{IntegratorKind, RunConfig};
use crate::error::CliError;
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `rk`, or `sdc` with its node and sweep counts.
    pub method: String,
    pub num_nodes: Option<usize>,
    pub sweeps: Option<usize>,
    pub errors: Vec<f64>,
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub dts: Vec<f64>,
    /// `analytic`, or `richardson` when errors are measured against a run at
    /// half the smallest step.
    pub reference: String,
    pub rows: Vec<ConvergenceRow>,
}

/// Checks that `dts` has at least three entries with a constant ratio
/// (to 1e-9 relative) and returns that ratio.
pub fn check_geometric(dts: &[f64]) -> Result<f64, CliError> {
    if dts.len() < 3 {
        return Err(CliError::Config(format!("need at least 3 step sizes, got {}", dts.len())));
    }
    if dts.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(CliError::Config("step sizes must be positive and finite".into()));
    }
    let ratio = dts[1] / dts[0];
    let geometric = dts.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric || ratio == 1.0 {
        return Err(CliError::Config(format!("step sizes {dts:?} are not a geometric progression")));
    }
    Ok(ratio)
}

/// Least-squares slope of `ln e` against `ln dt`.
pub fn observed_order(dts: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = dts.iter().zip(errors).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn final_state(cfg: &RunConfig, problem: &Problem, stepper: &dyn TimeStepper, dt: f64) -> Result<Vec<f64>, CliError> {
    let opts = IntegrateOptions { max_restarts: 0, store_every: 0 };
    let phi0 = problem.initial_state();
    let traj = integrate(stepper, problem.system(), &phi0, 0.0, cfg.t_end(), dt, opts, &mut NoProbe)?;
    Ok(traj.final_state().to_vec())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// Errors at `cfg.t_end()` for each step size. SDC rows use fixed sweep
/// counts for every `(nodes, sweeps)` pair; with `integrator = rk` a single
/// RK row is produced instead.
pub fn convergence_study(
    cfg: &RunConfig,
    dts: &[f64],
    node_counts: &[usize],
    sweep_counts: &[usize],
) -> Result<ConvergenceTable, CliError> {
    check_geometric(dts)?;
    cfg.validate_numerics()?;
    let problem = Problem::from_config(cfg);
    let mut methods: Vec<(String, Option<usize>, Option<usize>, Box<dyn TimeStepper>)> = Vec::new();
    if cfg.integrator == IntegratorKind::Rk {
        methods.push(("rk".into(), None, None, Box::new(RungeKutta::classical())));
    } else {
        for &m in node_counts {
            for &k in sweep_counts {
                let sdc = Sdc::new(m, SweepPolicy::Fixed(k)).map_err(|e| CliError::Config(e.to_string()))?;
                methods.push((format!("sdc_{m}n_{k}s"), Some(m), Some(k), Box::new(sdc)));
            }
        }
    }
    let analytic = problem.exact(cfg.t_end());
    let h_min = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::with_capacity(methods.len());
    for (method, num_nodes, sweeps, stepper) in methods {
        let reference = match &analytic {
            Some(r) => r.clone(),
            None => final_state(cfg, &problem, stepper.as_ref(), h_min / 2.0)?,
        };
        let errors = dts
            .iter()
            .map(|&h| final_state(cfg, &problem, stepper.as_ref(), h).map(|s| max_diff(&s, &reference)))
            .collect::<Result<Vec<_>, _>>()?;
        let order = observed_order(dts, &errors);
        rows.push(ConvergenceRow { method, num_nodes, sweeps, errors, order });
    }
    let reference = if analytic.is_some() { "analytic" } else { "richardson" };
    Ok(ConvergenceTable { dts: dts.to_vec(), reference: reference.into(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemKind;

    #[test]
    fn geometric_check() {
        assert_eq!(check_geometric(&[0.2, 0.1, 0.05]).unwrap(), 0.5);
        assert!(check_geometric(&[0.2, 0.1]).is_err());
        assert!(check_geometric(&[0.2, 0.1, 0.04]).is_err());
        assert!(check_geometric(&[0.1, 0.1, 0.1]).is_err());
        assert!(check_geometric(&[0.2, -0.1, 0.05]).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let dts = [0.4, 0.2, 0.1, 0.05];
        let errs: Vec<f64> = dts.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
        assert!((observed_order(&dts, &errs) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn predictor_only_is_first_order() {
        let cfg = RunConfig { problem: ProblemKind::Linear, ..Default::default() };
        let t = convergence_study(&cfg, &[0.1, 0.05, 0.025, 0.0125], &[3], &[1]).unwrap();
        assert_eq!(t.reference, "analytic");
        assert!((t.rows[0].order - 1.0).abs() < 0.3, "{}", t.rows[0].order);
    }

    #[test]
    fn rk_row_is_fourth_order() {
        let cfg = RunConfig { problem: ProblemKind::Linear, integrator: IntegratorKind::Rk, ..Default::default() };
        let t = convergence_study(&cfg, &[0.2, 0.1, 0.05], &[3], &[4]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!((t.rows[0].order - 4.0).abs() < 0.3, "{}", t.rows[0].order);
    }

    #[test]
    fn surrogate_uses_richardson_reference() {
        let mut cfg = RunConfig { integrator: IntegratorKind::Rk, ..Default::default() };
        cfg.ignition.n_grid = 24;
        let h = cfg.ignition.surrogate().default_dt();
        cfg.t_end = Some(4.0 * h);
        let t = convergence_study(&cfg, &[h, h / 2.0, h / 4.0], &[3], &[4]).unwrap();
        assert_eq!(t.reference, "richardson");
        assert!(t.rows[0].errors.iter().all(|e| e.is_finite()));
        assert!(t.rows[0].order > 3.0, "{}", t.rows[0].order);
    }
}
