//! Seeded Monte-Carlo fault campaigns.
//!
//! Run `i` of a campaign uses the fault RNG keyed by `(base_seed, i)`, so a
//! campaign is reproducible regardless of how many workers execute it.
//! Statistics come from the sorted list of completed-run scalars, which
//! makes them independent of completion order.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_csv, write_json};
use crate::run::{simulate, RunStatus};

/// Default number of runs per campaign.
pub const DEFAULT_RUNS: usize = 200;
pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScalar {
    pub run: u64,
    pub status: RunStatus,
    /// Final observable; absent for aborted runs.
    pub value: Option<f64>,
    pub restarts: usize,
    pub capped_steps: usize,
    pub fault_events: usize,
}

/// Distribution of a non-empty sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub span: f64,
    /// Unbiased sample variance; zero for a single value.
    pub variance: f64,
}

/// Statistics of `values`, computed from a sorted copy. `None` when empty.
pub fn sample_stats(values: &[f64]) -> Option<SampleStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let variance = if v.len() < 2 { 0.0 } else { v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) };
    let (min, max) = (v[0], v[v.len() - 1]);
    Some(SampleStats { mean, min, max, span: max - min, variance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub integrator: String,
    pub base_seed: u64,
    pub runs: usize,
    pub completed: usize,
    /// Statistics of the final observable over completed runs.
    pub stats: Option<SampleStats>,
    pub crash_count: usize,
    pub restart_count: usize,
    pub capped_steps: usize,
    pub fault_events: usize,
    pub scalars: Vec<RunScalar>,
}

impl CampaignSummary {
    pub fn from_scalars(integrator: &str, base_seed: u64, scalars: Vec<RunScalar>) -> Self {
        let values: Vec<f64> = scalars.iter().filter_map(|s| s.value).collect();
        CampaignSummary {
            integrator: integrator.to_string(),
            base_seed,
            runs: scalars.len(),
            completed: values.len(),
            stats: sample_stats(&values),
            crash_count: scalars.iter().filter(|s| s.status == RunStatus::Aborted).count(),
            restart_count: scalars.iter().map(|s| s.restarts).sum(),
            capped_steps: scalars.iter().map(|s| s.capped_steps).sum(),
            fault_events: scalars.iter().map(|s| s.fault_events).sum(),
            scalars,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.scalars.iter().filter_map(|s| s.value).collect()
    }
}

/// Runs `n_runs` seeded copies of `cfg`, in parallel on `cfg.workers`
/// threads. Files are not written; see [`write_campaign`].
pub fn run_campaign(cfg: &RunConfig, n_runs: usize, base_seed: u64) -> Result<CampaignSummary, CliError> {
    if n_runs < 1 {
        return Err(CliError::Config("a campaign needs at least one run".into()));
    }
    cfg.validate_numerics()?;
    let cfg = RunConfig { seed: base_seed, ..cfg.clone() };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let scalars = pool.install(|| {
        (0..n_runs as u64)
            .into_par_iter()
            .map(|run| {
                let r = simulate(&cfg, run)?;
                let m = r.metrics;
                Ok(RunScalar {
                    run,
                    status: m.status,
                    value: m.final_value,
                    restarts: m.restarts,
                    capped_steps: m.capped_steps,
                    fault_events: m.fault_events,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    Ok(CampaignSummary::from_scalars(cfg.integrator.name(), base_seed, scalars))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; a degenerate sample gets one bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let Some(stats) = sample_stats(values) else { return Vec::new() };
    if stats.span == 0.0 || bins <= 1 {
        return vec![HistogramBin { lo: stats.min, hi: stats.max, count: values.len() }];
    }
    let width = stats.span / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            lo: stats.min + k as f64 * width,
            hi: if k + 1 == bins { stats.max } else { stats.min + (k + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for v in values {
        let k = (((v - stats.min) / width) as usize).min(bins - 1);
        out[k].count += 1;
    }
    out
}

/// Writes `<prefix>_summary.json`, `<prefix>_scalars.csv` and
/// `<prefix>_histogram.csv` into `dir`.
pub fn write_campaign(dir: &Path, prefix: &str, summary: &CampaignSummary, bins: usize) -> Result<(), CliError> {
    write_json(&dir.join(format!("{prefix}_summary.json")), summary)?;
    write_csv(&dir.join(format!("{prefix}_scalars.csv")), &summary.scalars)?;
    write_csv(&dir.join(format!("{prefix}_histogram.csv")), histogram(&summary.values(), bins))
}
