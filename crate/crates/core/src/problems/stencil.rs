//! Eighth-order central first derivative on a periodic grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

/// Weights for offsets 1..=4; the stencil applies `+w` at `i + m` and `-w`
/// at `i - m`.
pub const CENTRAL_8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Minimum grid length: the stencil must not wrap onto itself.
pub const MIN_POINTS: usize = 9;

/// Writes `∂f/∂x` into `out`. Periodic wrap only; non-periodic content gives
/// a meaningless derivative at the seam.
pub fn periodic_first_derivative(field: &[f64], dx: f64, out: &mut [f64]) -> Result<()> {
    let n = field.len();
    if n < MIN_POINTS {
        return Err(Error::invalid(alloc::format!(
            "periodic 8th-order stencil needs at least {MIN_POINTS} points, got {n}"
        )));
    }
    if out.len() != n {
        return Err(Error::ShapeMismatch { expected: n, found: out.len() });
    }
    let inv_dx = 1.0 / dx;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, w) in CENTRAL_8.iter().enumerate() {
            let k = m + 1;
            acc += w * (field[(i + k) % n] - field[(i + n - k) % n]);
        }
        *o = acc * inv_dx;
    }
    Ok(())
}

/// Allocating wrapper around [`periodic_first_derivative`].
pub fn derivative_operator(field: &[f64], dx: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; field.len()];
    periodic_first_derivative(field, dx, &mut out)?;
    Ok(out)
}
