//! Kernel sensitivity profile: one scaled value per kernel, aimed at the
//! hottest grid point, and the resulting change in the final observable.

use resilient_sdc::fault::{one_shot_perturbation, FaultKind, OffsetTarget, OneShotSchedule, DEFAULT_SCALE};
use resilient_sdc::NoProbe;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::problem::Problem;
use crate::run::{integrate_config, metrics_for, RunStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySettings {
    pub step: usize,
    pub sweep: usize,
    pub node: usize,
    pub scale: f64,
}

impl Default for SensitivitySettings {
    fn default() -> Self {
        SensitivitySettings { step: 100, sweep: 1, node: 1, scale: DEFAULT_SCALE }
    }
}

impl SensitivitySettings {
    pub fn schedule(&self, problem: &Problem, kernel: &str) -> OneShotSchedule {
        let (start, len) = problem.hot_spot_window();
        OneShotSchedule {
            step: self.step,
            sweep: self.sweep,
            node: self.node,
            kernel: kernel.to_string(),
            offset: OffsetTarget::ArgMaxOfState { start, len },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub kernel: String,
    pub fired: bool,
    pub status: RunStatus,
    pub final_value: Option<f64>,
    /// Perturbed minus baseline final value.
    pub deviation: Option<f64>,
    pub restarts: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub integrator: String,
    pub baseline: f64,
    pub settings: SensitivitySettings,
    pub rows: Vec<SensitivityRow>,
}

/// One perturbed run per entry of `kernels`, in order; the configured random
/// fault mode is ignored.
pub fn sensitivity_sweep(
    cfg: &RunConfig,
    kernels: &[String],
    settings: &SensitivitySettings,
) -> Result<SensitivityTable, CliError> {
    cfg.validate_numerics()?;
    let problem = Problem::from_config(cfg);
    let baseline = integrate_config(cfg, &problem, &mut NoProbe)??;
    let baseline_value = problem.observable(baseline.final_state());
    let mut rows = Vec::with_capacity(kernels.len());
    for kernel in kernels {
        let mut hook = one_shot_perturbation(settings.schedule(&problem, kernel), FaultKind::Scale(settings.scale));
        let outcome = integrate_config(cfg, &problem, &mut hook)?;
        let m = metrics_for(cfg, &problem, &outcome, usize::from(hook.fired()));
        rows.push(SensitivityRow {
            kernel: kernel.clone(),
            fired: hook.fired(),
            status: m.status,
            final_value: m.final_value,
            deviation: m.final_value.map(|v| v - baseline_value),
            restarts: m.restarts,
            warning: hook.warning(),
        });
    }
    Ok(SensitivityTable { integrator: cfg.integrator.name().into(), baseline: baseline_value, settings: settings.clone(), rows })
}
