//! The three fractional operators as grid functions: the generalized integral,
//! the generalized derivative of order less than one, and their two-parameter
//! composition.
//!
//! Everything is computed in the transformed variable: after `s = t^rho / rho`
//! the integral is a plain Abel convolution and the scaled derivative
//! `t^(1-rho) d/dt` is `d/ds`, evaluated here by three-point finite
//! differences on the grid.
//!
//! Derivative values at the origin node are reported as `NaN`: the derivative
//! is generally unbounded at `t = 0` and is never extrapolated.

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::quadrature::KernelWeights;
use crate::space::{FhkParams, SGrid};

/// Generalized fractional integral of order `order` in `(0, 1]` on the grid.
///
/// Returns one value per node; the origin value is zero. Integrands with an
/// integrable origin singularity may pass `NaN`/infinity at node 0, in which
/// case the first cell is treated as constant at its right node.
pub fn katugampola_integral(order: f64, grid: &SGrid, f: &[f64]) -> Result<Vec<f64>> {
    let weights = KernelWeights::build(order, grid)?;
    integral_with_weights(&weights, grid, f)
}

fn integral_with_weights(weights: &KernelWeights, grid: &SGrid, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::IncompatibleInput(format!(
            "{} integrand values for {} grid nodes",
            f.len(),
            grid.len()
        )));
    }
    let order = weights.alpha();
    let mut g = f.to_vec();
    if !g[0].is_finite() {
        if g.len() < 2 {
            return Err(Error::InsufficientGrid(
                "singular origin needs at least two nodes".into(),
            ));
        }
        g[0] = g[1];
    }
    let inv_gamma = 1.0 / gamma_fn(order);
    let mut out = vec![0.0; grid.len()];
    for n in 1..grid.len() {
        out[n] = inv_gamma * weights.apply_row(n, &g)?;
    }
    Ok(out)
}

/// `d/ds` of grid samples by three-point stencils: centered on interior
/// nodes, one-sided second order at the right endpoint, `NaN` at the origin.
fn dds(grid: &SGrid, f: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::InsufficientGrid(
            "derivative stencils need at least three nodes".into(),
        ));
    }
    if f.len() != n {
        return Err(Error::IncompatibleInput(format!(
            "{} samples for {} grid nodes",
            f.len(),
            n
        )));
    }
    let s = grid.s();
    let mut out = vec![0.0; n];
    out[0] = f64::NAN;
    let stencil = |i0: usize, i1: usize, i2: usize, at: f64| -> f64 {
        let (x0, x1, x2) = (s[i0], s[i1], s[i2]);
        let (y0, y1, y2) = (f[i0], f[i1], f[i2]);
        y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    for i in 1..n - 1 {
        out[i] = stencil(i - 1, i, i + 1, s[i]);
    }
    out[n - 1] = stencil(n - 3, n - 2, n - 1, s[n - 1]);
    Ok(out)
}

/// Generalized fractional derivative of order `order` in `(0, 1)`:
/// `(t^(1-rho) d/dt)` applied to the integral of complementary order.
/// The origin node is `NaN`.
pub fn katugampola_derivative(order: f64, grid: &SGrid, f: &[f64]) -> Result<Vec<f64>> {
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "derivative order must lie in (0,1), got {order}"
        )));
    }
    let inner = katugampola_integral(1.0 - order, grid, f)?;
    dds(grid, &inner)
}

/// Two-parameter derivative: integral of order `beta (1-alpha)`, then the
/// scaled derivative, then integral of order `(1-alpha)(1-beta)` applied
/// first. Reduces to the one-parameter derivative at `beta = 0` and to its
/// regularized counterpart at `beta = 1`. The origin node is `NaN`.
pub fn hilfer_katugampola_derivative(
    params: &FhkParams,
    grid: &SGrid,
    f: &[f64],
) -> Result<Vec<f64>> {
    let alpha = params.alpha();
    let beta = params.beta();
    let inner_order = (1.0 - alpha) * (1.0 - beta);
    let outer_order = beta * (1.0 - alpha);

    let staged = if inner_order == 0.0 {
        f.to_vec()
    } else {
        katugampola_integral(inner_order, grid, f)?
    };
    let derived = dds(grid, &staged)?;
    if outer_order == 0.0 {
        return Ok(derived);
    }
    let mut out = katugampola_integral(outer_order, grid, &derived)?;
    out[0] = f64::NAN;
    Ok(out)
}
