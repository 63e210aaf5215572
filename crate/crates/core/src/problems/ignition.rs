//! One-dimensional hot-spot ignition surrogate.
//!
//! Temperature `T` and fuel mass fraction `Y` on a periodic grid evolve by
//!
//! ```text
//! ∂T/∂t = ∂/∂x(α ∂T/∂x) + Q ω
//! ∂Y/∂t = ∂/∂x(D ∂Y/∂x) − ω,      ω = A · Y · exp(−T_a / T)
//! ```
//!
//! with second derivatives formed by applying the eighth-order first
//! derivative twice. The right-hand side is split into six kernels, each of
//! whose output arrays passes through the run's [`KernelProbe`]:
//! `gradient_T`, `gradient_Y`, `diffusive_flux_T`, `diffusive_flux_Y`,
//! `reaction_rate` and `assembly` (the full `2N` derivative).
//!
//! State layout is `[T_0 … T_{N−1}, Y_0 … Y_{N−1}]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Violation, ViolationKind};
use crate::kernel::{EvalSite, KernelProbe, OdeSystem};
use crate::problems::stencil::{periodic_first_derivative, CENTRAL_8, MIN_POINTS};
use crate::stepper::Trajectory;
use crate::Result;

pub const GRADIENT_T: &str = "gradient_T";
pub const GRADIENT_Y: &str = "gradient_Y";
pub const DIFFUSIVE_FLUX_T: &str = "diffusive_flux_T";
pub const DIFFUSIVE_FLUX_Y: &str = "diffusive_flux_Y";
pub const REACTION_RATE: &str = "reaction_rate";
pub const ASSEMBLY: &str = "assembly";

/// Kernel ids in evaluation order.
pub const KERNELS: [&str; 6] = [GRADIENT_T, GRADIENT_Y, DIFFUSIVE_FLUX_T, DIFFUSIVE_FLUX_Y, REACTION_RATE, ASSEMBLY];

/// Peak excess over `t0` of the default hot spot, in kelvin.
pub const DEFAULT_PEAK_EXCESS: f64 = 150.0;

/// The raw `t_peak` that yields a hot spot `excess` above `t0` once the
/// `1/(σ√(2π))` prefactor is applied.
pub fn raw_peak_parameter(t0: f64, excess: f64, sigma: f64) -> f64 {
    t0 + excess * sigma * libm::sqrt(2.0 * core::f64::consts::PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IgnitionSurrogate {
    pub n_grid: usize,
    pub length: f64,
    /// Thermal diffusivity.
    pub alpha: f64,
    /// Fuel diffusivity.
    pub diff: f64,
    pub arrhenius_a: f64,
    /// Activation temperature.
    pub t_act: f64,
    /// Temperature rise per unit of fuel consumed.
    pub heat_release: f64,
    /// Ambient temperature of the hot-spot profile.
    pub t0: f64,
    /// Raw hot-spot parameter; the actual peak excess is
    /// `(t_peak − t0) / (σ √(2π))`.
    pub t_peak: f64,
    pub sigma: f64,
    pub x_star: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for IgnitionSurrogate {
    /// Calibrated so that a fixed-step run at [`default_dt`](Self::default_dt)
    /// shows a diffusive soak followed by thermal runaway in well under
    /// 2000 steps.
    fn default() -> Self {
        let sigma = 0.05;
        IgnitionSurrogate {
            n_grid: 120,
            length: 1.0,
            alpha: 1e-4,
            diff: 1e-4,
            arrhenius_a: 1000.0,
            t_act: 15_000.0,
            heat_release: 1500.0,
            t0: 1000.0,
            t_peak: raw_peak_parameter(1000.0, DEFAULT_PEAK_EXCESS, sigma),
            sigma,
            x_star: 0.5,
            t_min: 250.0,
            t_max: 4000.0,
            y_min: -0.1,
            y_max: 1.1,
        }
    }
}

impl IgnitionSurrogate {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid < MIN_POINTS {
            return Err(Error::invalid(alloc::format!("n_grid must be at least {MIN_POINTS}")));
        }
        if !(self.length > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::invalid("length and sigma must be positive"));
        }
        if !(self.alpha >= 0.0 && self.diff >= 0.0 && self.arrhenius_a >= 0.0) {
            return Err(Error::invalid("diffusivities and pre-exponential factor must be non-negative"));
        }
        if !(self.t_min < self.t_max && self.y_min < self.y_max) {
            return Err(Error::invalid("realizability bounds are empty"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_grid as f64
    }

    /// Cell-centre coordinate of grid point `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Fixed step: 0.2 of the explicit diffusive limit `dx² / (2 max(α, D))`.
    pub fn default_dt(&self) -> f64 {
        let d = self.alpha.max(self.diff);
        0.2 * self.dx() * self.dx() / (2.0 * d)
    }

    /// Hot-spot temperature profile at `x`.
    pub fn hotspot_temperature(&self, x: f64) -> f64 {
        let amp = (self.t_peak - self.t0) / (self.sigma * libm::sqrt(2.0 * core::f64::consts::PI));
        let d = x - self.x_star;
        self.t0 + amp * libm::exp(-d * d / (2.0 * self.sigma * self.sigma))
    }

    /// Gaussian hot spot in `T`, fresh mixture `Y ≡ 1`.
    pub fn gaussian_hotspot(&self) -> Vec<f64> {
        let n = self.n_grid;
        let mut state = vec![1.0; 2 * n];
        for (i, t) in state[..n].iter_mut().enumerate() {
            *t = self.hotspot_temperature(self.x(i));
        }
        state
    }

    /// Largest temperature in a state.
    pub fn peak_temperature(&self, state: &[f64]) -> f64 {
        state[..self.n_grid].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn rate(&self, t: f64, y: f64) -> f64 {
        self.arrhenius_a * y * libm::exp(-self.t_act / t)
    }

    /// Straight-line evaluation of the same right-hand side with no kernel
    /// boundaries and no probe.
    pub fn monolithic_rhs(&self, state: &[f64], out: &mut [f64]) {
        let n = self.n_grid;
        let inv_dx = 1.0 / self.dx();
        let (temp, fuel) = state.split_at(n);
        let d1 = |f: &dyn Fn(usize) -> f64, i: usize| {
            let mut acc = 0.0;
            for (m, w) in CENTRAL_8.iter().enumerate() {
                let k = m + 1;
                acc += w * (f((i + k) % n) - f((i + n - k) % n));
            }
            acc * inv_dx
        };
        let flux_t: Vec<f64> = (0..n).map(|i| self.alpha * d1(&|j| temp[j], i)).collect();
        let flux_y: Vec<f64> = (0..n).map(|i| self.diff * d1(&|j| fuel[j], i)).collect();
        for i in 0..n {
            let w = self.rate(temp[i], fuel[i]);
            out[i] = d1(&|j| flux_t[j], i) + self.heat_release * w;
            out[n + i] = d1(&|j| flux_y[j], i) - w;
        }
    }
}

impl OdeSystem for IgnitionSurrogate {
    fn dimension(&self) -> usize {
        2 * self.n_grid
    }

    fn rhs(&self, state: &[f64], site: &EvalSite, probe: &mut dyn KernelProbe, out: &mut [f64]) {
        let n = self.n_grid;
        let dx = self.dx();
        let (temp, fuel) = state.split_at(n);
        let mut grad_t = vec![0.0; n];
        let mut grad_y = vec![0.0; n];
        // Lengths are fixed by construction, so the stencil cannot fail here.
        periodic_first_derivative(temp, dx, &mut grad_t).expect("grid validated");
        probe.on_kernel_return(GRADIENT_T, &mut grad_t, state, site);
        periodic_first_derivative(fuel, dx, &mut grad_y).expect("grid validated");
        probe.on_kernel_return(GRADIENT_Y, &mut grad_y, state, site);

        let mut flux_t: Vec<f64> = grad_t.iter().map(|g| self.alpha * g).collect();
        probe.on_kernel_return(DIFFUSIVE_FLUX_T, &mut flux_t, state, site);
        let mut flux_y: Vec<f64> = grad_y.iter().map(|g| self.diff * g).collect();
        probe.on_kernel_return(DIFFUSIVE_FLUX_Y, &mut flux_y, state, site);

        let mut omega: Vec<f64> = temp.iter().zip(fuel).map(|(&t, &y)| self.rate(t, y)).collect();
        probe.on_kernel_return(REACTION_RATE, &mut omega, state, site);

        let (out_t, out_y) = out.split_at_mut(n);
        periodic_first_derivative(&flux_t, dx, out_t).expect("grid validated");
        periodic_first_derivative(&flux_y, dx, out_y).expect("grid validated");
        for i in 0..n {
            out_t[i] += self.heat_release * omega[i];
            out_y[i] -= omega[i];
        }
        probe.on_kernel_return(ASSEMBLY, out, state, site);
    }

    fn check_realizable(&self, state: &[f64]) -> core::result::Result<(), Violation> {
        let n = self.n_grid;
        let blocks = [("temperature", 0, self.t_min, self.t_max), ("fuel", n, self.y_min, self.y_max)];
        for (field, start, lo, hi) in blocks {
            for (i, &v) in state[start..start + n].iter().enumerate() {
                let kind = if !v.is_finite() {
                    ViolationKind::NonFinite
                } else if v < lo {
                    ViolationKind::BelowMinimum
                } else if v > hi {
                    ViolationKind::AboveMaximum
                } else {
                    continue;
                };
                let bound = match kind {
                    ViolationKind::BelowMinimum => Some(lo),
                    ViolationKind::AboveMaximum => Some(hi),
                    ViolationKind::NonFinite => None,
                };
                return Err(Violation { field, index: i, value: v, kind, bound });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnitionMetrics {
    /// Peak temperature of the last stored state.
    pub final_peak_t: f64,
    /// First time the peak temperature crosses halfway between its initial
    /// and final values, linearly interpolated; `None` if it never rises.
    pub ignition_delay: Option<f64>,
}

/// Peak temperature of every stored state of `traj`.
pub fn peak_history(traj: &Trajectory, n_grid: usize) -> Vec<f64> {
    traj.states
        .iter()
        .map(|s| s[..n_grid].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Final peak temperature and ignition delay of a surrogate trajectory.
pub fn ignition_metrics(traj: &Trajectory, n_grid: usize) -> Result<IgnitionMetrics> {
    if traj.states.is_empty() || traj.states.len() != traj.times.len() {
        return Err(Error::invalid("trajectory must hold at least one state"));
    }
    let peaks = peak_history(traj, n_grid);
    let first = peaks[0];
    let last = *peaks.last().expect("non-empty");
    let threshold = 0.5 * (first + last);
    let mut ignition_delay = None;
    if last > first {
        for k in 1..peaks.len() {
            if peaks[k - 1] < threshold && peaks[k] >= threshold {
                let frac = (threshold - peaks[k - 1]) / (peaks[k] - peaks[k - 1]);
                ignition_delay = Some(traj.times[k - 1] + frac * (traj.times[k] - traj.times[k - 1]));
                break;
            }
        }
    }
    Ok(IgnitionMetrics { final_peak_t: last, ignition_delay })
}
