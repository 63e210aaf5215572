use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resilient_sdc::fault::{FaultKind, OffsetTarget, OneShotSchedule, DEFAULT_SCALE};
use resilient_sdc::problems::ignition::KERNELS;
use resilient_sdc::problems::linear::DERIVATIVE_KERNEL;

use rsdc::campaign::{write_campaign, DEFAULT_BINS, DEFAULT_RUNS};
use rsdc::config::{FaultModeSetting, IntegratorKind, ProblemKind, RunConfig, OUTPUT_DIR_ENV};
use rsdc::output::{residual_rows, write_csv, write_events, write_json};
use rsdc::problem::Problem;
use rsdc::{
    convergence_study, exit, linear_perturbation_study, one_shot_study, run_campaign, run_single, sensitivity_sweep,
    CliError, LinearPerturbationSetup, RunStatus, SensitivitySettings,
};

#[derive(Parser)]
#[command(name = "rsdc", version, about = "Resilient SDC experiments: convergence, fault injection, campaigns")]
struct Cli {
    /// TOML file with run settings; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Observed order of accuracy over a geometric list of step sizes.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
        dts: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        nodes: Vec<usize>,
        #[arg(long = "sweep-counts", value_delimiter = ',', default_value = "1,2,4")]
        sweep_counts: Vec<usize>,
    },
    /// Kernel sensitivity: one scaled value per kernel at the hottest point.
    Sense {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        shot: ShotArgs,
        /// Kernels to perturb; defaults to every kernel of the problem.
        #[arg(long, value_delimiter = ',')]
        kernels: Vec<String>,
    },
    /// One-shot fault experiment with per-sweep residual or error history.
    Inject {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        shot: ShotArgs,
        /// Kernel to perturb (surrogate only).
        #[arg(long, default_value = "reaction_rate")]
        kernel: String,
        /// Growth rates for the perturbed evaluation (linear problem only).
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,10,100")]
        rates: Vec<f64>,
    },
    /// Single run of the ignition surrogate.
    Ignite {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Single run of whichever problem is configured.
    Run {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Seeded Monte-Carlo fault campaign.
    Campaign {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// Base seed; run `i` draws faults from `(base_seed, i)`. Defaults to `seed`.
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Run both `rk` and `sdc_resilient` plus their fault-free references.
        #[arg(long)]
        compare: bool,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorKind>,
    #[arg(long)]
    num_nodes: Option<usize>,
    /// Sweeps per step for `sdc_fixed`.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_restarts: Option<usize>,
    #[arg(long)]
    r1_tol: Option<f64>,
    #[arg(long)]
    ratio_tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    min_sweeps: Option<usize>,
    #[arg(long, value_enum)]
    fault_mode: Option<FaultModeSetting>,
    #[arg(long)]
    fault_window: Option<u64>,
    #[arg(long)]
    fault_scale: Option<f64>,
    #[arg(long)]
    fault_streams: Option<usize>,
    #[arg(long)]
    fault_kernel: Option<String>,
    #[arg(long)]
    fault_bit: Option<u32>,
    #[arg(long)]
    fault_offset: Option<usize>,
    /// Growth rate of the linear problem.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    arrhenius_a: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ShotArgs {
    #[arg(long, default_value_t = 100)]
    shot_step: usize,
    #[arg(long, default_value_t = 3)]
    shot_sweep: usize,
    /// Zero-based node (or RK stage) index.
    #[arg(long, default_value_t = 1)]
    shot_node: usize,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    shot_scale: f64,
}

impl RunArgs {
    fn apply(self, cfg: &mut RunConfig) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        set(&mut cfg.problem, self.problem);
        set(&mut cfg.integrator, self.integrator);
        set(&mut cfg.num_nodes, self.num_nodes);
        set(&mut cfg.sweeps, self.sweeps);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.max_restarts, self.max_restarts);
        set(&mut cfg.controller.r1_tol, self.r1_tol);
        set(&mut cfg.controller.ratio_tol, self.ratio_tol);
        set(&mut cfg.controller.max_sweeps, self.max_sweeps);
        set(&mut cfg.controller.min_sweeps, self.min_sweeps);
        set(&mut cfg.fault.mode, self.fault_mode);
        set(&mut cfg.fault.window, self.fault_window);
        set(&mut cfg.fault.scale, self.fault_scale);
        set(&mut cfg.fault.streams, self.fault_streams);
        set(&mut cfg.linear.s, self.rate);
        set(&mut cfg.ignition.arrhenius_a, self.arrhenius_a);
        set(&mut cfg.ignition.n_grid, self.n_grid);
        if self.dt.is_some() {
            cfg.dt = self.dt;
        }
        if self.t_end.is_some() {
            cfg.t_end = self.t_end;
        }
        if self.fault_kernel.is_some() {
            cfg.fault.kernel = self.fault_kernel;
        }
        if self.fault_bit.is_some() {
            cfg.fault.bit = self.fault_bit;
        }
        if self.fault_offset.is_some() {
            cfg.fault.offset = self.fault_offset;
        }
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
    }
}

fn load(config: Option<&Path>, args: RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    args.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Option<&Path> {
    cfg.output_dir.as_deref()
}

fn status_line(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Clean => "clean",
        RunStatus::Capped => "completed with capped steps",
        RunStatus::Aborted => "aborted: restarts exhausted",
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn single(cfg: RunConfig) -> Result<i32, CliError> {
    let report = run_single(&cfg)?;
    print_json(&report.metrics);
    eprintln!("rsdc: {}", status_line(report.status()));
    Ok(report.status().exit_code())
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Run { run } => single(load(config, run)?),
        Command::Ignite { run } => {
            let mut cfg = load(config, run)?;
            cfg.problem = ProblemKind::Ignition;
            cfg.validate()?;
            single(cfg)
        }
        Command::Converge { run, dts, nodes, sweep_counts } => {
            let cfg = load(config, run)?;
            let table = convergence_study(&cfg, &dts, &nodes, &sweep_counts)?;
            for row in &table.rows {
                println!("{:<14} order {:.3}  errors {:?}", row.method, row.order, row.errors);
            }
            if let Some(dir) = out_dir(&cfg) {
                write_json(&dir.join("convergence.json"), &table)?;
            }
            Ok(exit::CLEAN)
        }
        Command::Sense { run, shot, kernels } => {
            let cfg = load(config, run)?;
            let kernels = if !kernels.is_empty() {
                kernels
            } else if cfg.problem == ProblemKind::Linear {
                vec![DERIVATIVE_KERNEL.to_string()]
            } else {
                KERNELS.iter().map(|k| k.to_string()).collect()
            };
            let settings = SensitivitySettings {
                step: shot.shot_step,
                sweep: shot.shot_sweep,
                node: shot.shot_node,
                scale: shot.shot_scale,
            };
            let table = sensitivity_sweep(&cfg, &kernels, &settings)?;
            println!("baseline {}", table.baseline);
            for row in &table.rows {
                if let Some(w) = &row.warning {
                    eprintln!("rsdc: warning: {w}");
                }
                let dev = row.deviation.map_or("-".to_string(), |d| format!("{d:+.6e}"));
                println!("{:<18} {:<8} deviation {dev}", row.kernel, format!("{:?}", row.status).to_lowercase());
            }
            if let Some(dir) = out_dir(&cfg) {
                write_json(&dir.join("sensitivity.json"), &table)?;
                write_csv(&dir.join("sensitivity.csv"), &table.rows)?;
            }
            Ok(exit::CLEAN)
        }
        Command::Inject { run, shot, kernel, rates } => {
            let cfg = load(config, run)?;
            match cfg.problem {
                ProblemKind::Linear => {
                    let setup = LinearPerturbationSetup {
                        lambda: cfg.linear.s,
                        dt: cfg.dt(),
                        num_nodes: cfg.num_nodes,
                        sweep: shot.shot_sweep,
                        node: shot.shot_node,
                        ..Default::default()
                    };
                    let curves = linear_perturbation_study(&setup, &rates)?;
                    #[derive(serde::Serialize)]
                    struct Row {
                        s: f64,
                        sweep: usize,
                        error: f64,
                        collocation_error: f64,
                        residual: f64,
                    }
                    let rows: Vec<Row> = curves
                        .iter()
                        .flat_map(|c| {
                            (0..c.errors.len()).map(move |k| Row {
                                s: c.s,
                                sweep: k + 1,
                                error: c.errors[k],
                                collocation_error: c.collocation_errors[k],
                                residual: c.residuals[k],
                            })
                        })
                        .collect();
                    for c in &curves {
                        println!("s = {:<6} errors {:?}", c.s, &c.errors[..c.errors.len().min(8)]);
                    }
                    if let Some(dir) = out_dir(&cfg) {
                        write_csv(&dir.join("perturbation.csv"), rows)?;
                    }
                    Ok(exit::CLEAN)
                }
                ProblemKind::Ignition => {
                    let problem = Problem::from_config(&cfg);
                    let (start, len) = problem.hot_spot_window();
                    let schedule = OneShotSchedule {
                        step: shot.shot_step,
                        sweep: shot.shot_sweep,
                        node: shot.shot_node,
                        kernel,
                        offset: OffsetTarget::ArgMaxOfState { start, len },
                    };
                    let report = one_shot_study(&cfg, schedule, FaultKind::Scale(shot.shot_scale))?;
                    if let Some(w) = &report.warning {
                        eprintln!("rsdc: warning: {w}");
                    }
                    print_json(&report);
                    if let Some(dir) = out_dir(&cfg) {
                        write_json(&dir.join("inject.json"), &report)?;
                        write_csv(&dir.join("residuals_baseline.csv"), residual_rows(&report.baseline_traces))?;
                        write_csv(&dir.join("residuals_perturbed.csv"), residual_rows(&report.perturbed_traces))?;
                        let events: Vec<_> = report.event.iter().cloned().collect();
                        write_events(&dir.join("events.jsonl"), 0, &events)?;
                    }
                    Ok(report.perturbed.status.exit_code())
                }
            }
        }
        Command::Campaign { run, runs, base_seed, bins, compare } => {
            let cfg = load(config, run)?;
            let base_seed = base_seed.unwrap_or(cfg.seed);
            let integrators = if compare {
                vec![IntegratorKind::Rk, IntegratorKind::SdcResilient]
            } else {
                vec![cfg.integrator]
            };
            let mut comparison = serde_json::Map::new();
            for integrator in integrators {
                let icfg = RunConfig { integrator, ..cfg.clone() };
                let summary = run_campaign(&icfg, runs, base_seed)?;
                let st = summary.stats;
                println!(
                    "{:<14} runs {} completed {} crashes {} restarts {} events {} mean {} variance {}",
                    summary.integrator,
                    summary.runs,
                    summary.completed,
                    summary.crash_count,
                    summary.restart_count,
                    summary.fault_events,
                    st.map_or("-".into(), |s| format!("{:.6}", s.mean)),
                    st.map_or("-".into(), |s| format!("{:.6e}", s.variance)),
                );
                if let Some(dir) = out_dir(&cfg) {
                    write_campaign(dir, &format!("campaign_{}", summary.integrator), &summary, bins)?;
                }
                if compare {
                    let clean = RunConfig { fault: Default::default(), ..icfg.clone() };
                    let reference = rsdc::simulate(&clean, 0)?.metrics.final_value;
                    comparison.insert(
                        summary.integrator.clone(),
                        serde_json::json!({ "reference": reference, "stats": summary.stats, "crash_count": summary.crash_count }),
                    );
                }
            }
            if compare {
                if let (Some(rk), Some(sdc)) = (comparison.get("rk"), comparison.get("sdc_resilient")) {
                    let var = |v: &serde_json::Value| v["stats"]["variance"].as_f64();
                    if let (Some(a), Some(b)) = (var(rk), var(sdc)) {
                        println!("variance ratio sdc/rk {:.4e}", b / a);
                    }
                }
                if let Some(dir) = out_dir(&cfg) {
                    write_json(&dir.join("campaign_comparison.json"), &comparison)?;
                }
            }
            Ok(exit::CLEAN)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("rsdc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
