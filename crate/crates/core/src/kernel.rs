//! The evaluation interface shared by every integrator and problem.

use crate::error::Violation;

/// Where in a run a right-hand-side evaluation happens.
///
/// For SDC, `sweep` is 1 for the explicit-Euler predictor and counts up with
/// each correction sweep; `node` is the index of the collocation node whose
/// derivative is being evaluated. Runge-Kutta steps report `sweep = 1` and
/// use `node` for the stage index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalSite {
    pub step: usize,
    pub sweep: usize,
    pub node: usize,
    pub time: f64,
}

/// Observer called immediately after every kernel returns.
///
/// The probe may rewrite `output` in place; this is how soft errors are
/// injected. `state` is the state vector the evaluation started from and
/// must not be modified.
pub trait KernelProbe {
    fn on_kernel_return(
        &mut self,
        kernel: &'static str,
        output: &mut [f64],
        state: &[f64],
        site: &EvalSite,
    );
}

/// A probe that does nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoProbe;

impl KernelProbe for NoProbe {
    #[inline]
    fn on_kernel_return(&mut self, _: &'static str, _: &mut [f64], _: &[f64], _: &EvalSite) {}
}

impl<P: KernelProbe + ?Sized> KernelProbe for &mut P {
    #[inline]
    fn on_kernel_return(
        &mut self,
        kernel: &'static str,
        output: &mut [f64],
        state: &[f64],
        site: &EvalSite,
    ) {
        (**self).on_kernel_return(kernel, output, state, site)
    }
}

/// A system of ODEs `φ' = F(φ, t)` whose right-hand side is assembled from
/// probed kernels.
///
/// Implementations are immutable; all per-run mutable state lives in the
/// probe, so one system can be shared by concurrent runs.
pub trait OdeSystem {
    fn dimension(&self) -> usize;

    /// Writes `F(state, site.time)` into `out`. Every kernel output must be
    /// passed through `probe` before it is consumed.
    fn rhs(&self, state: &[f64], site: &EvalSite, probe: &mut dyn KernelProbe, out: &mut [f64]);

    /// Bounds check used to turn corrupted states into restarts. The default
    /// only rejects non-finite components.
    fn check_realizable(&self, state: &[f64]) -> Result<(), Violation> {
        check_finite("state", state)
    }
}

pub(crate) fn check_finite(field: &'static str, values: &[f64]) -> Result<(), Violation> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Violation::non_finite(field, i, values[i])),
        None => Ok(()),
    }
}
