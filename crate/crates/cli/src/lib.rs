//! Experiment drivers and file formats for `resilient-sdc`: single runs,
//! one-shot fault experiments, kernel sensitivity sweeps, convergence
//! studies and seeded Monte-Carlo fault campaigns.

pub mod campaign;
pub mod config;
pub mod converge;
mod error;
pub mod inject;
pub mod output;
pub mod problem;
pub mod run;
pub mod sense;

pub use campaign::{run_campaign, sample_stats, CampaignSummary, RunScalar, SampleStats};
pub use config::{IntegratorKind, ProblemKind, RunConfig};
pub use converge::{convergence_study, observed_order, ConvergenceTable};
pub use error::{exit, CliError};
pub use inject::{linear_perturbation_study, one_shot_study, LinearPerturbationSetup, OneShotReport, PerturbationCurve};
pub use run::{run_single, simulate, RunMetrics, RunReport, RunStatus};
pub use sense::{sensitivity_sweep, SensitivitySettings, SensitivityTable};
