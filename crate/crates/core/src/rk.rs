//! Explicit Runge-Kutta baseline.
//!
//! The baseline has no convergence diagnostic of its own: a corrupted stage
//! derivative that stays within the realizability bounds silently changes
//! the answer. Stage derivatives go through the same probed kernels as SDC,
//! so both integrators see faults at the same per-evaluation rate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::kernel::{check_finite, EvalSite, KernelProbe, OdeSystem};
use crate::Result;

/// Coefficients `(a, b, c)` of an explicit Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    /// Row `i` holds `a[i][0..i]`; anything on or above the diagonal must be 0.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Checks shape, explicitness and the consistency conditions
    /// `Σ b = 1`, `c_i = Σ_j a_ij` (to 1e-14).
    pub fn validate(&self) -> Result<()> {
        let s = self.b.len();
        if s == 0 || self.c.len() != s || self.a.len() != s {
            return Err(Error::invalid("tableau a, b and c must describe the same number of stages"));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.iter().skip(i).any(|&v| v != 0.0) {
                return Err(Error::invalid(format!("tableau row {i} is not strictly lower triangular")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - self.c[i]).abs() > 1e-14 {
                return Err(Error::invalid(format!("c[{i}] = {} but row sum is {sum}", self.c[i])));
            }
        }
        let bsum: f64 = self.b.iter().sum();
        if (bsum - 1.0).abs() > 1e-14 {
            return Err(Error::invalid(format!("weights sum to {bsum}, expected 1")));
        }
        Ok(())
    }
}

/// The classical four-stage, fourth-order method.
pub fn classical_rk4() -> ButcherTableau {
    ButcherTableau {
        a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
        b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        c: vec![0.0, 0.5, 0.5, 1.0],
    }
}

/// Runge-Kutta as a [`TimeStepper`](crate::stepper::TimeStepper).
#[derive(Debug, Clone, PartialEq)]
pub struct RungeKutta {
    pub tableau: ButcherTableau,
}

impl RungeKutta {
    pub fn new(tableau: ButcherTableau) -> Result<Self> {
        tableau.validate()?;
        Ok(RungeKutta { tableau })
    }

    pub fn classical() -> Self {
        RungeKutta { tableau: classical_rk4() }
    }
}

/// One explicit RK step. Each stage state is checked for realizability
/// before its derivative is evaluated.
pub fn rk_step<S: OdeSystem + ?Sized>(
    phi_n: &[f64],
    t: f64,
    dt: f64,
    tableau: &ButcherTableau,
    sys: &S,
    step: usize,
    probe: &mut dyn KernelProbe,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let dim = sys.dimension();
    if phi_n.len() != dim {
        return Err(Error::ShapeMismatch { expected: dim, found: phi_n.len() });
    }
    let non_realizable = |node, violation| Error::NonRealizable { step, sweep: 1, node, violation };
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(tableau.stages());
    let mut stage = vec![0.0; dim];
    for i in 0..tableau.stages() {
        for (d, v) in stage.iter_mut().enumerate() {
            let incr: f64 = tableau.a[i].iter().zip(&k).map(|(a, kj)| a * kj[d]).sum();
            *v = phi_n[d] + dt * incr;
        }
        sys.check_realizable(&stage).map_err(|v| non_realizable(i, v))?;
        let mut ki = vec![0.0; dim];
        let site = EvalSite { step, sweep: 1, node: i, time: t + tableau.c[i] * dt };
        sys.rhs(&stage, &site, probe, &mut ki);
        check_finite("rhs", &ki).map_err(|v| non_realizable(i, v))?;
        k.push(ki);
    }
    let next: Vec<f64> = (0..dim)
        .map(|d| phi_n[d] + dt * tableau.b.iter().zip(&k).map(|(b, ki)| b * ki[d]).sum::<f64>())
        .collect();
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::NoProbe;
    use crate::problems::linear::LinearProblem;

    #[test]
    fn classical_coefficients() {
        let t = classical_rk4();
        assert_eq!(t.b, vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
        assert_eq!(t.c, vec![0.0, 0.5, 0.5, 1.0]);
        assert!(t.validate().is_ok());
        assert_eq!(t.stages(), 4);
    }

    #[test]
    fn invalid_tableaux() {
        let mut t = classical_rk4();
        t.b[0] = 0.2;
        assert!(t.validate().is_err());
        let mut t = classical_rk4();
        t.a[1] = vec![0.5, 0.1];
        assert!(t.validate().is_err());
        let mut t = classical_rk4();
        t.c[3] = 0.9;
        assert!(t.validate().is_err());
    }

    #[test]
    fn one_step_of_exponential_is_truncated_series() {
        let h: f64 = 0.1;
        let y = rk_step(&[1.0], 0.0, h, &classical_rk4(), &LinearProblem::new(1.0), 0, &mut NoProbe).unwrap();
        let series = 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0;
        assert!((y[0] - series).abs() < 1e-16);
        assert!((y[0] - 1.105_170_833_333_333_2).abs() < 1e-15);
    }

    #[test]
    fn observed_order_four() {
        let sys = LinearProblem::new(1.0);
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = vec![1.0];
            for k in 0..n {
                y = rk_step(&y, k as f64 * h, h, &classical_rk4(), &sys, k, &mut NoProbe).unwrap();
            }
            (y[0] - core::f64::consts::E).abs()
        };
        let order = (err(10) / err(20)).log2();
        assert!((order - 4.0).abs() < 0.2, "order {order}");
    }
}
