//! Run configuration: TOML file, command-line overrides, validation.

use std::fs;
use std::path::{Path, PathBuf};

use resilient_sdc::fault::{FaultConfig, FaultMode, DEFAULT_SCALE, DEFAULT_WINDOW};
use resilient_sdc::problems::ignition::{raw_peak_parameter, DEFAULT_PEAK_EXCESS};
use resilient_sdc::problems::IgnitionSurrogate;
use resilient_sdc::ControllerConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that supplies the output directory.
pub const OUTPUT_DIR_ENV: &str = "RSDC_OUTPUT_DIR";

/// End time of surrogate runs when none is configured: mid-way up the
/// thermal runaway, where the final peak temperature is most sensitive.
pub const IGNITION_T_END: f64 = 85.0;
pub const LINEAR_T_END: f64 = 1.0;
pub const LINEAR_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Linear,
    #[default]
    Ignition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Rk,
    #[value(name = "sdc_fixed")]
    SdcFixed,
    #[default]
    #[value(name = "sdc_resilient")]
    SdcResilient,
}

impl IntegratorKind {
    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Rk => "rk",
            IntegratorKind::SdcFixed => "sdc_fixed",
            IntegratorKind::SdcResilient => "sdc_resilient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FaultModeSetting {
    #[default]
    Off,
    #[value(name = "type_a")]
    TypeA,
    #[value(name = "type_b")]
    TypeB,
}

impl From<FaultModeSetting> for FaultMode {
    fn from(m: FaultModeSetting) -> Self {
        match m {
            FaultModeSetting::Off => FaultMode::Off,
            FaultModeSetting::TypeA => FaultMode::TypeA,
            FaultModeSetting::TypeB => FaultMode::TypeB,
        }
    }
}

/// Residual-ratio controller settings (restart budget lives on [`RunConfig`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSettings {
    pub r1_tol: f64,
    pub ratio_tol: f64,
    pub max_sweeps: usize,
    pub min_sweeps: usize,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        let c = ControllerConfig::default();
        ControllerSettings { r1_tol: c.r1_tol, ratio_tol: c.ratio_tol, max_sweeps: c.max_sweeps, min_sweeps: c.min_sweeps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultSettings {
    pub mode: FaultModeSetting,
    pub window: u64,
    pub scale: f64,
    pub streams: usize,
    /// Only corrupt this kernel's output.
    pub kernel: Option<String>,
    pub bit: Option<u32>,
    pub offset: Option<usize>,
}

impl Default for FaultSettings {
    fn default() -> Self {
        FaultSettings {
            mode: FaultModeSetting::Off,
            window: DEFAULT_WINDOW,
            scale: DEFAULT_SCALE,
            streams: 1,
            kernel: None,
            bit: None,
            offset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSettings {
    /// Growth rate in `y' = s y`.
    pub s: f64,
    pub y0: f64,
}

impl Default for LinearSettings {
    fn default() -> Self {
        LinearSettings { s: 1.0, y0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgnitionSettings {
    pub n_grid: usize,
    pub length: f64,
    pub alpha: f64,
    pub diff: f64,
    pub arrhenius_a: f64,
    pub t_act: f64,
    pub heat_release: f64,
    pub t0: f64,
    /// Defaults to the surrogate's own value for the configured `sigma`.
    pub t_peak: Option<f64>,
    pub sigma: f64,
    pub x_star: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for IgnitionSettings {
    fn default() -> Self {
        let p = IgnitionSurrogate::default();
        IgnitionSettings {
            n_grid: p.n_grid,
            length: p.length,
            alpha: p.alpha,
            diff: p.diff,
            arrhenius_a: p.arrhenius_a,
            t_act: p.t_act,
            heat_release: p.heat_release,
            t0: p.t0,
            t_peak: None,
            sigma: p.sigma,
            x_star: p.x_star,
            t_min: p.t_min,
            t_max: p.t_max,
            y_min: p.y_min,
            y_max: p.y_max,
        }
    }
}

impl IgnitionSettings {
    pub fn surrogate(&self) -> IgnitionSurrogate {
        let t_peak = self
            .t_peak
            .unwrap_or_else(|| raw_peak_parameter(self.t0, DEFAULT_PEAK_EXCESS, self.sigma));
        IgnitionSurrogate {
            n_grid: self.n_grid,
            length: self.length,
            alpha: self.alpha,
            diff: self.diff,
            arrhenius_a: self.arrhenius_a,
            t_act: self.t_act,
            heat_release: self.heat_release,
            t0: self.t0,
            t_peak,
            sigma: self.sigma,
            x_star: self.x_star,
            t_min: self.t_min,
            t_max: self.t_max,
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub integrator: IntegratorKind,
    pub num_nodes: usize,
    /// Sweeps per step for `sdc_fixed`, predictor included.
    pub sweeps: usize,
    pub controller: ControllerSettings,
    pub max_restarts: usize,
    /// Defaults to the problem's own step.
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: u64,
    pub fault: FaultSettings,
    pub linear: LinearSettings,
    pub ignition: IgnitionSettings,
    pub output_dir: Option<PathBuf>,
    /// Campaign worker threads; defaults to the number of CPUs.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::default(),
            integrator: IntegratorKind::default(),
            num_nodes: 3,
            sweeps: 4,
            controller: ControllerSettings::default(),
            max_restarts: 3,
            dt: None,
            t_end: None,
            seed: 0,
            fault: FaultSettings::default(),
            linear: LinearSettings::default(),
            ignition: IgnitionSettings::default(),
            output_dir: None,
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    pub fn controller_config(&self) -> ControllerConfig {
        let c = &self.controller;
        ControllerConfig {
            r1_tol: c.r1_tol,
            ratio_tol: c.ratio_tol,
            max_sweeps: c.max_sweeps,
            min_sweeps: c.min_sweeps,
            max_restarts: self.max_restarts,
        }
    }

    /// Fault configuration for run `run_id` of a campaign seeded with `self.seed`.
    pub fn fault_config(&self, run_id: u64) -> FaultConfig {
        let f = &self.fault;
        FaultConfig {
            mode: f.mode.into(),
            window: f.window,
            scale: f.scale,
            seed: self.seed,
            run_id,
            streams: f.streams,
            targeted_kernel: f.kernel.clone(),
            targeted_bit: f.bit,
            targeted_offset: f.offset,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| match self.problem {
            ProblemKind::Linear => LINEAR_DT,
            ProblemKind::Ignition => self.ignition.surrogate().default_dt(),
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(match self.problem {
            ProblemKind::Linear => LINEAR_T_END,
            ProblemKind::Ignition => IGNITION_T_END,
        })
    }

    /// Checks every field without touching the output directory.
    pub fn validate_numerics(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.num_nodes < 2 {
            return bad(format!("num_nodes must be at least 2, got {}", self.num_nodes));
        }
        if self.integrator == IntegratorKind::SdcFixed && self.sweeps == 0 {
            return bad("sweeps must be at least 1".into());
        }
        if self.integrator == IntegratorKind::SdcResilient {
            self.controller_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt must be positive and finite, got {dt}"));
        }
        let t_end = self.t_end();
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return bad(format!("t_end must be non-negative and finite, got {t_end}"));
        }
        self.fault_config(0).validate().map_err(|e| CliError::Config(e.to_string()))?;
        match self.problem {
            ProblemKind::Linear => {
                if !(self.linear.s.is_finite() && self.linear.y0.is_finite()) {
                    return bad("linear s and y0 must be finite".into());
                }
            }
            ProblemKind::Ignition => {
                self.ignition.surrogate().validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Full validation, including creating the output directory and
    /// checking that it accepts files.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_numerics()?;
        if let Some(dir) = &self.output_dir {
            ensure_writable(dir)?;
        }
        Ok(())
    }
}

pub(crate) fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Config(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".rsdc-write-test");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}
