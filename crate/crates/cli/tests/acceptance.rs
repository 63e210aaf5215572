//! Acceptance suite. Runs every criterion in order, prints one line per
//! check and a verdict per criterion, and exits non-zero if any failed.

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resilient_sdc::fault::{bit_flip, FaultConfig, FaultInjector, FaultKind, FaultMode, OffsetTarget, OneShotSchedule};
use resilient_sdc::problems::ignition::{ASSEMBLY, REACTION_RATE};
use resilient_sdc::problems::{IgnitionSurrogate, LinearProblem};
use resilient_sdc::sdc::{integrate_step, integrate_step_nodes, sdc_sweep};
use resilient_sdc::{
    integrate, ControllerConfig, EvalSite, IntegrateOptions, KernelProbe, NoProbe, OdeSystem, QuadratureRule,
    RungeKutta, Sdc, SweepPolicy, TimeStepper, Violation,
};
use rsdc::config::FaultModeSetting;
use rsdc::{
    convergence_study, linear_perturbation_study, one_shot_study, run_campaign, simulate, IntegratorKind,
    LinearPerturbationSetup, ProblemKind, RunConfig,
};

// Criterion 1
const ORDER_DTS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const ORDER_CASES: [(usize, usize, f64, f64); 2] = [(3, 4, 3.7, 4.3), (2, 2, 1.7, 2.3)];
// Criterion 2
const COLLOCATION_TOL: f64 = 1e-12;
const EXTRA_SWEEP_TOL: f64 = 1e-13;
const CONVERGED_SWEEPS: usize = 30;
// Criterion 3
const PERTURBED_RATE: f64 = 1.5;
const PERTURBATION_RATES: [f64; 4] = [0.5, 1.5, 10.0, 100.0];
const JUMP_FACTOR: f64 = 5.0;
const RATIO_SPREAD: f64 = 0.2;
const RATIO_WINDOW: usize = 6;
const RECOVERY_TOL: f64 = 1e-12;
// Criterion 4
const SPIKE_FACTOR: f64 = 10.0;
const SHOT_STEP: usize = 100;
const SHOT_SWEEP: usize = 3;
const SHOT_NODE: usize = 1;
const TYPE_A_SCALE: f64 = 1e4;
// Criterion 5
const REPLAY_SWEEPS: usize = 8;
// Criterion 6
const CAMPAIGN_RUNS: usize = 200;
const CAMPAIGN_SEED: u64 = 1;
const VARIANCE_RATIO_MAX: f64 = 0.1;
const MEAN_FACTOR: f64 = 0.2;
// Criterion 7
const WINDOW: u64 = 5580;
const WINDOWS_CHECKED: u64 = 10;
const INVOLUTION_PAIRS: usize = 1_000_000;
const REPRO_RUNS: usize = 6;
// Criterion 8
const QUADRATURE_TOL: f64 = 1e-12;
const MATRIX_TOL: f64 = 1e-15;
// Criterion 9
const RESTART_T_END: f64 = 10.0;
const RESTART_BIT: u32 = 62;
const RESTART_WINDOW: u64 = 120;
const RESTART_SEED: u64 = 42;

struct Criterion {
    id: usize,
    title: &'static str,
    ok: bool,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        println!("criterion {id}: {title}");
        Criterion { id, title, ok: true }
    }

    fn check(&mut self, pass: bool, what: impl AsRef<str>) {
        println!("    [{}] {}", if pass { "ok" } else { "FAIL" }, what.as_ref());
        self.ok &= pass;
    }
}

fn ignition_config(integrator: IntegratorKind) -> RunConfig {
    RunConfig { problem: ProblemKind::Ignition, integrator, ..Default::default() }
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "collocation order on y' = y");
    let cfg = RunConfig { problem: ProblemKind::Linear, t_end: Some(1.0), ..Default::default() };
    for (nodes, sweeps, lo, hi) in ORDER_CASES {
        let table = convergence_study(&cfg, &ORDER_DTS, &[nodes], &[sweeps]).unwrap();
        let row = &table.rows[0];
        // Errors are recomputed here against exp(1) rather than trusted.
        let sdc = Sdc::new(nodes, SweepPolicy::Fixed(sweeps)).unwrap();
        let errs: Vec<f64> = ORDER_DTS
            .iter()
            .map(|&h| {
                let traj = integrate(&sdc, &LinearProblem::new(1.0), &[1.0], 0.0, 1.0, h, IntegrateOptions::default(), &mut NoProbe)
                    .unwrap();
                (traj.final_state()[0] - std::f64::consts::E).abs()
            })
            .collect();
        let agree = errs.iter().zip(&row.errors).all(|(a, b)| (a - b).abs() <= 1e-14);
        c.check(agree, format!("{nodes} nodes/{sweeps} sweeps: errors match an independent rerun"));
        c.check(
            (lo..=hi).contains(&row.order),
            format!("{nodes} nodes/{sweeps} sweeps: observed order {:.4} in [{lo}, {hi}]", row.order),
        );
    }
    c
}

/// 3-node Lobatto collocation for `y' = λ y` on one step, solved directly
/// with the hand-derived integration matrix.
fn collocation_3node(lambda: f64, dt: f64) -> [f64; 3] {
    let q = [[0.0, 0.0, 0.0], [5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]];
    let z = lambda * dt;
    // (I - z Q[1.., 1..]) u = 1 + z Q[1.., 0]
    let (a, b) = (1.0 - z * q[1][1], -z * q[1][2]);
    let (cc, d) = (-z * q[2][1], 1.0 - z * q[2][2]);
    let (r1, r2) = (1.0 + z * q[1][0], 1.0 + z * q[2][0]);
    let det = a * d - b * cc;
    [1.0, (r1 * d - b * r2) / det, (a * r2 - cc * r1) / det]
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "fixed point and convergence floor");
    let rule = QuadratureRule::lobatto(3).unwrap();
    for (lambda, dt) in [(1.0, 0.1), (1.0, 0.25), (-2.0, 0.2)] {
        let sys = LinearProblem::new(lambda);
        let (sol, _) =
            integrate_step_nodes(&[1.0], 0.0, dt, &rule, &sys, &SweepPolicy::Fixed(CONVERGED_SWEEPS), 0, &mut NoProbe)
                .unwrap();
        let direct = collocation_3node(lambda, dt);
        let gap = sol.node_states.iter().zip(direct).map(|(s, d)| (s[0] - d).abs()).fold(0.0, f64::max);
        c.check(gap < COLLOCATION_TOL, format!("λ={lambda} dt={dt}: |SDC - collocation| = {gap:.2e} < {COLLOCATION_TOL:.0e}"));
        let next = sdc_sweep(&sol, &rule, &sys, CONVERGED_SWEEPS + 1, 0, &mut NoProbe).unwrap();
        let change =
            sol.node_states.iter().zip(&next.node_states).map(|(a, b)| (a[0] - b[0]).abs()).fold(0.0, f64::max);
        c.check(change < EXTRA_SWEEP_TOL, format!("λ={lambda} dt={dt}: one more sweep moves it {change:.2e} < {EXTRA_SWEEP_TOL:.0e}"));
    }
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "linear perturbation recovery");
    let setup = LinearPerturbationSetup { sweeps: 40, ..Default::default() };
    println!(
        "    setup: y' = {}y, dt = {}, {} nodes, perturbed at sweep {} node index {}",
        setup.lambda, setup.dt, setup.num_nodes, setup.sweep, setup.node
    );
    let curves = linear_perturbation_study(&setup, &PERTURBATION_RATES).unwrap();
    let clean = linear_perturbation_study(&LinearPerturbationSetup { sweeps: 40, ..Default::default() }, &[setup.lambda])
        .unwrap()
        .remove(0);
    for curve in &curves {
        let s = curve.s;
        let e = &curve.errors;
        if s == PERTURBED_RATE {
            let jump = e[setup.sweep - 1] / e[0];
            c.check(
                jump <= JUMP_FACTOR && jump >= 1.0 / JUMP_FACTOR,
                format!("s={s}: post-sweep error / predictor error = {jump:.3} (within a factor of {JUMP_FACTOR})"),
            );
        }
        // The sweep after the perturbed one carries the damaged node value to
        // the later nodes; geometric damping is measured from there on.
        let ce = &curve.collocation_errors;
        let first = setup.sweep + 1;
        let ratios: Vec<f64> = (first..first + RATIO_WINDOW).map(|k| ce[k] / ce[k - 1]).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max);
        c.check(
            spread <= RATIO_SPREAD,
            format!("s={s}: per-sweep ratios {ratios:.3?} within ±{:.0}% of {mean:.4} (max {:.1}%)", RATIO_SPREAD * 100.0, spread * 100.0),
        );
        let last = curve.errors.len() - 1;
        let final_gap = curve.collocation_errors[last];
        let vs_clean = (curve.errors[last] - clean.errors[last]).abs();
        c.check(
            final_gap < RECOVERY_TOL && vs_clean < RECOVERY_TOL,
            format!("s={s}: converged solution differs from the unperturbed one by {final_gap:.1e} < {RECOVERY_TOL:.0e}"),
        );
    }
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "residual spike detection");
    let cfg = ignition_config(IntegratorKind::SdcResilient);
    let p = cfg.ignition.surrogate();
    for kernel in [REACTION_RATE, ASSEMBLY] {
        let schedule = OneShotSchedule {
            step: SHOT_STEP,
            sweep: SHOT_SWEEP,
            node: SHOT_NODE,
            kernel: kernel.into(),
            offset: OffsetTarget::ArgMaxOfState { start: 0, len: p.n_grid },
        };
        let r = one_shot_study(&cfg, schedule, FaultKind::Scale(TYPE_A_SCALE)).unwrap();
        c.check(r.fired, format!("{kernel}: fault fired at step {SHOT_STEP}, sweep {SHOT_SWEEP}, node index {SHOT_NODE}"));
        let post = r.perturbed_residuals[SHOT_SWEEP - 1];
        let base = *r.baseline_residuals.last().unwrap();
        let spike = post / base;
        c.check(spike >= SPIKE_FACTOR, format!("{kernel}: post-sweep residual {post:.3e} vs fault-free final {base:.3e} (×{spike:.2e})"));
        let (b, q) = (r.baseline_sweeps.unwrap(), r.perturbed_sweeps.unwrap());
        c.check(q > b, format!("{kernel}: controller took {q} sweeps vs {b} fault-free"));
    }
    c
}

/// Reference acceptance predicate, written out independently of the
/// controller: true once the residual history `norms` may be accepted.
fn predicate_accepts(norms: &[f64], cfg: &ControllerConfig) -> bool {
    if norms[0] == 0.0 {
        return true;
    }
    let n = norms.len();
    if n < cfg.min_sweeps.max(2) {
        return false;
    }
    let ratio = |den: f64| if den == 0.0 { 0.0 } else { norms[n - 1] / den };
    ratio(norms[0]) < cfg.r1_tol && ratio(norms[n - 2]) > cfg.ratio_tol
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "zero overhead without faults");
    let cfg = ignition_config(IntegratorKind::SdcResilient);
    let p = cfg.ignition.surrogate();
    let ctrl = cfg.controller_config();
    let traj = simulate(&cfg, 0).unwrap().trajectory.unwrap();
    let rule = QuadratureRule::lobatto(cfg.num_nodes).unwrap();
    let (mut equal, mut excess, mut prefix_mismatch, mut unconverged) = (0usize, 0usize, 0usize, 0usize);
    for (k, trace) in traj.traces.iter().enumerate() {
        let h = traj.times[k + 1] - traj.times[k];
        let (_, fixed) = integrate_step(
            &traj.states[k],
            traj.times[k],
            h,
            &rule,
            &p,
            &SweepPolicy::Fixed(REPLAY_SWEEPS),
            k,
            &mut NoProbe,
        )
        .unwrap();
        let norms = &fixed.residual_maxnorms;
        let minimal = (1..=norms.len()).find(|&l| predicate_accepts(&norms[..l], &ctrl));
        match minimal {
            Some(m) if m == trace.sweeps_taken => equal += 1,
            Some(m) if trace.sweeps_taken > m => excess += 1,
            Some(_) => {}
            None => unconverged += 1,
        }
        if norms[..trace.sweeps_taken] != trace.residual_maxnorms[..] {
            prefix_mismatch += 1;
        }
    }
    let steps = traj.traces.len();
    c.check(equal == steps, format!("{equal}/{steps} steps used exactly the minimal sweep count of a fixed {REPLAY_SWEEPS}-sweep replay"));
    c.check(excess == 0, format!("{excess} steps swept more than needed"));
    c.check(unconverged == 0, format!("{unconverged} steps needed the sweep cap"));
    c.check(prefix_mismatch == 0, format!("{prefix_mismatch} steps whose residual history differs from the replay"));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "distribution narrowing under type-B faults");
    let mut faulty = ignition_config(IntegratorKind::Rk);
    faulty.fault.mode = FaultModeSetting::TypeB;
    faulty.fault.window = WINDOW;
    println!("    {CAMPAIGN_RUNS} runs per integrator, base seed {CAMPAIGN_SEED}, one fault per {WINDOW} kernel calls");
    let mut stats = Vec::new();
    for integrator in [IntegratorKind::Rk, IntegratorKind::SdcResilient] {
        let cfg = RunConfig { integrator, ..faulty.clone() };
        let reference = simulate(&RunConfig { fault: Default::default(), ..cfg.clone() }, 0)
            .unwrap()
            .metrics
            .final_value
            .unwrap();
        let start = Instant::now();
        let s = run_campaign(&cfg, CAMPAIGN_RUNS, CAMPAIGN_SEED).unwrap();
        let st = s.stats.unwrap();
        println!(
            "    {:<14} ref {reference:.8} mean {:.8} min {:.6} max {:.6} span {:.3e} var {:.3e} crashes {} restarts {} events {} ({:.1?})",
            s.integrator,
            st.mean,
            st.min,
            st.max,
            st.span,
            st.variance,
            s.crash_count,
            s.restart_count,
            s.fault_events,
            start.elapsed()
        );
        stats.push((reference, st));
    }
    let ((ref_rk, rk), (ref_sdc, sdc)) = (stats[0], stats[1]);
    let ratio = sdc.variance / rk.variance;
    c.check(ratio <= VARIANCE_RATIO_MAX, format!("variance ratio SDC/RK = {ratio:.3e} <= {VARIANCE_RATIO_MAX}"));
    let eps = (ref_sdc - ref_rk).abs();
    let lhs = (sdc.mean - ref_rk).abs();
    let rhs = MEAN_FACTOR * (rk.mean - ref_rk).abs() + eps;
    c.check(lhs <= rhs, format!("|SDC mean - ref| = {lhs:.3e} <= {MEAN_FACTOR}·|RK mean - ref| + ε = {rhs:.3e} (ε = {eps:.1e})"));
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "injection protocol");
    for streams in [1usize, 2, 4] {
        for first_window in [0u64, 3, 17] {
            let cfg = FaultConfig { mode: FaultMode::TypeB, window: WINDOW, seed: 99, streams, ..Default::default() };
            let mut inj = FaultInjector::new(cfg).unwrap();
            let mut buf = vec![1.0; 16];
            let total = (first_window + WINDOWS_CHECKED) * WINDOW;
            for call in 0..total {
                buf.fill(1.0);
                inj.maybe_inject(&mut buf, "k", &EvalSite { step: call as usize, sweep: 1, node: 0, time: 0.0 });
            }
            let lo = first_window * WINDOW;
            let counts: Vec<usize> = (0..streams)
                .map(|s| inj.events().iter().filter(|e| e.stream == s && e.call_index >= lo).count())
                .collect();
            c.check(
                counts.iter().all(|&n| n as u64 == WINDOWS_CHECKED),
                format!("{streams} streams, windows {first_window}..{}: events per stream {counts:?}", first_window + WINDOWS_CHECKED),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut broken = 0usize;
    for _ in 0..INVOLUTION_PAIRS {
        let bits: u64 = rng.gen();
        let bit: u32 = rng.gen_range(0..64);
        let v = f64::from_bits(bits);
        let once = bit_flip(v, bit).unwrap();
        if bit_flip(once, bit).unwrap().to_bits() != bits || (once.to_bits() ^ bits).count_ones() != 1 {
            broken += 1;
        }
    }
    c.check(broken == 0, format!("bit_flip involution held for {INVOLUTION_PAIRS} random (value, bit) pairs ({broken} failures)"));
    let mut cfg = ignition_config(IntegratorKind::SdcResilient);
    cfg.fault.mode = FaultModeSetting::TypeB;
    let a = run_campaign(&cfg, REPRO_RUNS, 11).unwrap();
    let b = run_campaign(&RunConfig { workers: Some(1), ..cfg.clone() }, REPRO_RUNS, 11).unwrap();
    let bits = |s: &rsdc::CampaignSummary| s.scalars.iter().map(|r| r.value.map(f64::to_bits)).collect::<Vec<_>>();
    c.check(
        a == b && bits(&a) == bits(&b) && serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
        format!("two {REPRO_RUNS}-run campaigns with the same seed agree bit for bit"),
    );
    let other = run_campaign(&cfg, REPRO_RUNS, 12).unwrap();
    c.check(bits(&other) != bits(&a), "a different base seed gives a different campaign");
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "quadrature exactness");
    for n in 2..=5usize {
        let rule = QuadratureRule::lobatto(n).unwrap();
        let mut worst = 0.0f64;
        for p in 0..n as i32 {
            for m in 0..n {
                let q: f64 = (0..n).map(|j| rule.q_matrix[(m, j)] * rule.nodes[j].powi(p)).sum();
                worst = worst.max((q - rule.nodes[m].powi(p + 1) / (p + 1) as f64).abs());
            }
        }
        c.check(worst <= QUADRATURE_TOL, format!("{n} nodes: max error integrating t^p, p <= {} is {worst:.1e}", n - 1));
    }
    let hand = [[0.0, 0.0, 0.0], [5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]];
    let rule = QuadratureRule::lobatto(3).unwrap();
    let worst = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (rule.q_matrix[(i, j)] - hand[i][j]).abs()).fold(0.0, f64::max);
    c.check(worst <= MATRIX_TOL, format!("3-node matrix matches [[0,0,0],[5/24,1/3,-1/24],[1/6,2/3,1/6]] to {worst:.1e}"));
    c
}

/// Records each attempt's starting state and every realizability failure.
struct Audited<'a> {
    inner: &'a IgnitionSurrogate,
    starts: RefCell<Vec<(usize, Vec<u64>)>>,
    violations: RefCell<Vec<String>>,
}

impl OdeSystem for Audited<'_> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn rhs(&self, state: &[f64], site: &EvalSite, probe: &mut dyn KernelProbe, out: &mut [f64]) {
        if site.sweep == 1 && site.node == 0 {
            self.starts.borrow_mut().push((site.step, state.iter().map(|v| v.to_bits()).collect()));
        }
        self.inner.rhs(state, site, probe, out)
    }

    fn check_realizable(&self, state: &[f64]) -> Result<(), Violation> {
        let r = self.inner.check_realizable(state);
        if let Err(v) = &r {
            self.violations.borrow_mut().push(v.label());
        }
        r
    }
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "checkpoint/restart");
    let p = IgnitionSurrogate::default();
    let steppers: [(&str, Box<dyn TimeStepper>); 2] = [
        ("rk", Box::new(RungeKutta::classical())),
        ("sdc_resilient", Box::new(Sdc::new(3, SweepPolicy::Resilient(ControllerConfig::default())).unwrap())),
    ];
    for (name, stepper) in steppers {
        let sys = Audited { inner: &p, starts: RefCell::new(Vec::new()), violations: RefCell::new(Vec::new()) };
        let cfg = FaultConfig {
            mode: FaultMode::TypeB,
            window: RESTART_WINDOW,
            seed: RESTART_SEED,
            targeted_kernel: Some(REACTION_RATE.into()),
            targeted_bit: Some(RESTART_BIT),
            ..Default::default()
        };
        let mut inj = FaultInjector::new(cfg).unwrap();
        let traj = integrate(stepper.as_ref(), &sys, &p.gaussian_hotspot(), 0.0, RESTART_T_END, p.default_dt(), IntegrateOptions::default(), &mut inj)
            .unwrap();
        let restarts = traj.total_restarts();
        let violations = sys.violations.borrow();
        let hot = violations.iter().filter(|v| v.starts_with("temperature-")).count();
        c.check(
            restarts > 0 && hot > 0,
            format!("{name}: {} faults, {restarts} restarts, {hot} rejected temperature fields", inj.events().len()),
        );
        let starts = sys.starts.borrow();
        let mut retried = 0;
        let mut identical = true;
        for (k, trace) in traj.traces.iter().enumerate() {
            let attempts: Vec<&Vec<u64>> = starts.iter().filter(|(s, _)| *s == k).map(|(_, b)| b).collect();
            let cached: Vec<u64> = traj.states[k].iter().map(|v| v.to_bits()).collect();
            if trace.restarts > 0 {
                retried += 1;
            }
            identical &= attempts.len() == trace.restarts + 1 && attempts.iter().all(|a| **a == cached);
        }
        c.check(identical, format!("{name}: all attempts of {retried} restarted steps began from the bitwise cached state"));
        let bad = traj.states.iter().filter(|s| p.check_realizable(s).is_err()).count();
        c.check(bad == 0, format!("{name}: {} accepted states, {bad} out of bounds", traj.states.len()));
    }
    c
}

fn main() -> ExitCode {
    let criteria: [fn() -> Criterion; 9] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9];
    let mut results = Vec::new();
    for run in criteria {
        let start = Instant::now();
        let c = run();
        println!("    ({:.2?})", start.elapsed());
        results.push(c);
    }
    println!();
    for c in &results {
        println!("{} criterion {}: {}", if c.ok { "PASS" } else { "FAIL" }, c.id, c.title);
    }
    if results.iter().all(|c| c.ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
