use crate::kernel::{EvalSite, KernelProbe, OdeSystem};

/// Kernel id of the single derivative kernel.
pub const DERIVATIVE_KERNEL: &str = "derivative";

/// Replaces the growth rate at one `(step, sweep, node)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPerturbation {
    pub step: usize,
    pub sweep: usize,
    pub node: usize,
    pub s: f64,
}

/// `y' = s·y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearProblem {
    pub s: f64,
    pub perturbation: Option<LinearPerturbation>,
}

impl Default for LinearProblem {
    fn default() -> Self {
        LinearProblem { s: 1.0, perturbation: None }
    }
}

impl LinearProblem {
    pub fn new(s: f64) -> Self {
        LinearProblem { s, perturbation: None }
    }

    pub fn with_perturbation(mut self, p: LinearPerturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    fn rate_at(&self, site: &EvalSite) -> f64 {
        match self.perturbation {
            Some(p) if p.step == site.step && p.sweep == site.sweep && p.node == site.node => p.s,
            _ => self.s,
        }
    }
}

impl OdeSystem for LinearProblem {
    fn dimension(&self) -> usize {
        1
    }

    fn rhs(&self, state: &[f64], site: &EvalSite, probe: &mut dyn KernelProbe, out: &mut [f64]) {
        out[0] = self.rate_at(site) * state[0];
        probe.on_kernel_return(DERIVATIVE_KERNEL, out, state, site);
    }
}

/// `y0 · e^{s t}`.
pub fn linear_exact(t: f64, s: f64, y0: f64) -> f64 {
    y0 * libm::exp(s * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::NoProbe;

    #[test]
    fn exact_solution() {
        assert!((linear_exact(1.0, 1.0, 1.0) - core::f64::consts::E).abs() < 1e-15);
        assert_eq!(linear_exact(0.0, 3.0, 2.5), 2.5);
        assert!((linear_exact(1.0, 1.5, 1.0) - 1.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn perturbation_applies_only_at_its_site() {
        let p = LinearProblem::new(1.0).with_perturbation(LinearPerturbation { step: 0, sweep: 3, node: 1, s: 1.5 });
        let mut out = [0.0];
        let hit = EvalSite { step: 0, sweep: 3, node: 1, time: 0.5 };
        p.rhs(&[2.0], &hit, &mut NoProbe, &mut out);
        assert_eq!(out[0], 3.0);
        p.rhs(&[2.0], &EvalSite { sweep: 2, ..hit }, &mut NoProbe, &mut out);
        assert_eq!(out[0], 2.0);
    }
}
