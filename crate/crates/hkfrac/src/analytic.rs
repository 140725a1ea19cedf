//! Closed-form references used to cross-validate the numerical paths: the
//! two-parameter Mittag-Leffler function, series solutions of the linear
//! problem, and an independently coded classical solver for the `rho = 1`
//! reductions.
//!
//! The series here are built term by term from the power rule of the
//! fractional integral, so they share no code with the quadrature engine.

use statrs::function::gamma::{gamma as gamma_fn, ln_gamma};

use crate::error::{Error, Result};
use crate::space::{CauchyProblem, FhkParams, SGrid, WeightedTrajectory};
use crate::volterra::SolveOptions;

/// Desk-scale argument bound for the plain series evaluation.
pub const ML_SERIES_MAX_ABS_Z: f64 = 50.0;

/// A Mittag-Leffler evaluation with its truncation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct MlEval {
    pub value: f64,
    /// Bound on the dropped tail, from the geometric decay of the terms at
    /// the truncation point.
    pub tail_bound: f64,
    pub terms: usize,
}

/// Two-parameter Mittag-Leffler function `E_{a,b}(z)`, summed as
/// `sum_k z^k / Gamma(a k + b)` with adaptive truncation.
///
/// The series stops once three consecutive terms drop below
/// `1e-16 (|sum| + 1)`. Arguments outside `|z| <= 50`, or sums whose largest
/// term exceeds the final value by enough to destroy double precision, are
/// rejected as out of regime.
pub fn mittag_leffler_with_tail(a: f64, b: f64, z: f64) -> Result<MlEval> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "series parameters must be positive, got a={a}, b={b}"
        )));
    }
    if !z.is_finite() || z.abs() > ML_SERIES_MAX_ABS_Z {
        return Err(Error::OutOfRegime(format!(
            "|z| = {} exceeds the series regime {ML_SERIES_MAX_ABS_Z}",
            z.abs()
        )));
    }
    if a == 1.0 && b == 1.0 {
        // exact reduction to the exponential; the direct series loses digits
        // to cancellation for strongly negative arguments
        let value = z.exp();
        return Ok(MlEval {
            value,
            tail_bound: 2.0 * f64::EPSILON * value.abs(),
            terms: 0,
        });
    }
    let mut sum = 0.0f64;
    let mut largest = 0.0f64;
    let mut small_streak = 0;
    let mut prev_abs = f64::INFINITY;
    let mut term_abs = 0.0;
    let mut k = 0usize;
    let max_terms = 400;
    while k < max_terms {
        let kf = k as f64;
        let ln_mag = if z == 0.0 && k > 0 {
            f64::NEG_INFINITY
        } else if k == 0 {
            -ln_gamma(b)
        } else {
            kf * z.abs().ln() - ln_gamma(a * kf + b)
        };
        let mag = ln_mag.exp();
        let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        // Gamma(a k + b) may sit on a pole-free but huge value; mag underflows
        // harmlessly to zero there.
        sum += sign * mag;
        largest = largest.max(mag);
        prev_abs = term_abs;
        term_abs = mag;
        k += 1;
        if mag < 1e-16 * (sum.abs() + 1.0) {
            small_streak += 1;
            if small_streak >= 3 {
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    if k == max_terms {
        return Err(Error::OutOfRegime(format!(
            "series failed to settle within {max_terms} terms for a={a}, b={b}, z={z}"
        )));
    }
    if largest > 1e13 * (sum.abs() + 1.0) {
        return Err(Error::OutOfRegime(format!(
            "cancellation exhausts double precision: largest term {largest:e} against sum {sum:e}"
        )));
    }
    let ratio = if prev_abs > 0.0 { term_abs / prev_abs } else { 0.0 };
    let tail_bound = if ratio < 1.0 {
        term_abs * ratio / (1.0 - ratio)
    } else {
        term_abs * 10.0
    };
    Ok(MlEval {
        value: sum,
        tail_bound,
        terms: k,
    })
}

/// Two-parameter Mittag-Leffler function, value only.
pub fn mittag_leffler(a: f64, b: f64, z: f64) -> Result<f64> {
    mittag_leffler_with_tail(a, b, z).map(|e| e.value)
}

/// Weighted series solution of the linear problem `D^{alpha,beta} x = lam x`
/// with weighted initial datum `x0`:
/// `y(s) = x0 sum_k lam^k s^(k alpha) / Gamma(k alpha + gamma)`.
pub fn linear_solution(
    params: &FhkParams,
    x0: f64,
    lam: f64,
    grid: &SGrid,
) -> Result<WeightedTrajectory> {
    let alpha = params.alpha();
    let gamma = params.gamma();
    let s_end = grid.s_at(grid.len() - 1);
    let z_end = lam.abs() * s_end.powf(alpha);
    if z_end > ML_SERIES_MAX_ABS_Z {
        return Err(Error::OutOfRegime(format!(
            "|lam| s_N^alpha = {z_end} exceeds the series regime {ML_SERIES_MAX_ABS_Z}"
        )));
    }
    let mut y = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s = grid.s_at(i);
        let mut sum = 0.0f64;
        let mut small_streak = 0;
        for k in 0..400 {
            let kf = k as f64;
            let ln_mag = if s == 0.0 && k > 0 {
                f64::NEG_INFINITY
            } else {
                kf * (lam.abs() * s.powf(alpha)).max(f64::MIN_POSITIVE).ln()
                    - ln_gamma(alpha * kf + gamma)
            };
            let mag = if k == 0 {
                1.0 / gamma_fn(gamma)
            } else {
                ln_mag.exp()
            };
            let sign = if lam < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            sum += sign * mag;
            if mag < 1e-16 * (sum.abs() + 1.0) {
                small_streak += 1;
                if small_streak >= 3 {
                    break;
                }
            } else {
                small_streak = 0;
            }
        }
        y.push(x0 * sum);
    }
    WeightedTrajectory::from_scalar(*params, grid.clone(), y)
}

/// Solves a `rho = 1`, `beta` in `{0, 1}` problem through a separate direct
/// code path: Abel product integration in the original variable with no
/// transform plumbing. Used to cross-check the general solver; both paths
/// discretize the same integral, so they agree to rounding on shared grids.
pub fn classical_reduction_solve(
    problem: &CauchyProblem,
    opts: &SolveOptions,
) -> Result<WeightedTrajectory> {
    let params = *problem.params();
    if params.rho() != 1.0 {
        return Err(Error::ParameterDomain(format!(
            "classical reduction needs rho = 1, got {}",
            params.rho()
        )));
    }
    if params.beta() != 0.0 && params.beta() != 1.0 {
        return Err(Error::ParameterDomain(format!(
            "classical reduction needs beta in {{0, 1}}, got {}",
            params.beta()
        )));
    }
    let alpha = params.alpha();
    let gamma = params.gamma();
    let lambda = problem.lambda();
    let nu = lambda; // rho = 1: the transformed and raw exponents coincide
    let dim = problem.dim();
    let horizon = problem.horizon();

    // direct t-grid with the same layout the solver would use; at rho = 1
    // the transformed and original variables coincide
    let n = opts.n;
    let t: Vec<f64> = opts.mesh.build(1.0, horizon, n)?.s().to_vec();

    // product-integration weights for (t_n - tau)^(alpha-1) tau^(-nu) against
    // a piecewise-linear factor, assembled directly in t
    use statrs::function::beta::beta_reg;
    let ln_beta = |a: f64, b: f64| ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let row = |nrow: usize| -> Vec<f64> {
        let c = t[nrow];
        let mut w = vec![0.0; nrow + 1];
        if nu == 0.0 {
            for j in 0..nrow {
                let (a, b) = (t[j], t[j + 1]);
                let d = b - a;
                let (big_a, big_b) = (c - a, c - b);
                let i0 = (big_a.powf(alpha) - big_b.powf(alpha)) / alpha;
                let i1 =
                    (big_a.powf(alpha + 1.0) - big_b.powf(alpha + 1.0)) / (alpha + 1.0);
                w[j] += ((i1 - big_b * i0) / d).max(0.0);
                w[j + 1] += ((big_a * i0 - i1) / d).max(0.0);
            }
        } else {
            let scale0 = ln_beta(1.0 - nu, alpha).exp() * c.powf(alpha - nu);
            let scale1 = ln_beta(2.0 - nu, alpha).exp() * c.powf(alpha + 1.0 - nu);
            let mut r0_lo = 0.0;
            let mut r1_lo = 0.0;
            for j in 0..nrow {
                let (a, b) = (t[j], t[j + 1]);
                let d = b - a;
                let xb = (b / c).min(1.0);
                let r0_hi = beta_reg(1.0 - nu, alpha, xb);
                let r1_hi = beta_reg(2.0 - nu, alpha, xb);
                let m0 = scale0 * (r0_hi - r0_lo);
                let m1 = scale1 * (r1_hi - r1_lo);
                w[j] += ((b * m0 - m1) / d).max(0.0);
                w[j + 1] += ((m1 - a * m0) / d).max(0.0);
                r0_lo = r0_hi;
                r1_lo = r1_hi;
            }
        }
        w
    };
    let rows: Vec<Vec<f64>> = (0..=n).map(row).collect();

    let y0c: Vec<f64> = problem.x0().iter().map(|v| v / gamma_fn(gamma)).collect();
    let mut y: Vec<Vec<f64>> = vec![y0c.clone(); n + 1];
    let inv_gamma_alpha = 1.0 / gamma_fn(alpha);

    // regularized integrand factor F_j = t_j^nu phi(t_j, x_j), probed at a
    // scaled-down first node for the origin value
    let eval_f = |j: usize, yrow: &[f64]| -> Result<Vec<f64>> {
        let (tj, scale) = if j == 0 {
            let tp = t[1] * 1e-3;
            (tp, tp.powf(nu))
        } else {
            (t[j], t[j].powf(nu))
        };
        let xfac = tj.powf(gamma - 1.0);
        let x: Vec<f64> = yrow.iter().map(|v| xfac * v).collect();
        let phi = problem.eval_rhs(tj, &x)?;
        Ok(phi.into_iter().map(|v| scale * v).collect())
    };

    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut f_vals: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        for j in 0..=n {
            f_vals.push(eval_f(j, &y[j])?);
        }
        let mut max_change = 0.0f64;
        let mut y_new = vec![y0c.clone(); n + 1];
        for i in 1..=n {
            let tfac = t[i].powf(1.0 - gamma) * inv_gamma_alpha;
            for d in 0..dim {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += rows[i][j] * f_vals[j][d];
                }
                y_new[i][d] = y0c[d] + tfac * acc;
                max_change = max_change.max((y_new[i][d] - y[i][d]).abs());
            }
        }
        y = y_new;
        residual = max_change;
        if residual < opts.tol {
            break;
        }
    }
    let _ = residual;
    let grid = SGrid::from_s_nodes(1.0, t)?;
    WeightedTrajectory::new(params, grid, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FhkParams;

    // frozen against an independent high-precision evaluation of
    // exp(z^2) erfc(-z)
    const E_HALF_AT_ONE: f64 = 5.008980080762283;
    const E_HALF_AT_MINUS_ONE: f64 = 0.427583576155807;

    #[test]
    fn reduces_to_exp() {
        for &z in &[-10.0, -3.0, -1.0, 0.5, 1.0, 4.0, 10.0] {
            let got = mittag_leffler(1.0, 1.0, z).unwrap();
            let rel = ((got - z.exp()) / z.exp()).abs();
            assert!(rel <= 1e-12, "z={z} rel={rel}");
        }
    }

    #[test]
    fn argument_zero_is_reciprocal_gamma() {
        let got = mittag_leffler(0.7, 1.3, 0.0).unwrap();
        assert!((got - 1.0 / gamma_fn(1.3)).abs() < 1e-15);
    }

    #[test]
    fn reduces_to_cosh() {
        for &z in &[0.25, 1.0, 2.5, 5.0] {
            let got = mittag_leffler(2.0, 1.0, z * z).unwrap();
            let want = z.cosh();
            assert!(((got - want) / want).abs() <= 1e-12, "z={z}");
        }
    }

    #[test]
    fn half_order_values_match_frozen_references() {
        let a = mittag_leffler(0.5, 1.0, 1.0).unwrap();
        assert!(((a - E_HALF_AT_ONE) / E_HALF_AT_ONE).abs() < 1e-12);
        let b = mittag_leffler(0.5, 1.0, -1.0).unwrap();
        assert!(((b - E_HALF_AT_MINUS_ONE) / E_HALF_AT_MINUS_ONE).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_regime() {
        assert!(matches!(
            mittag_leffler(0.5, 1.0, 51.0),
            Err(Error::OutOfRegime(_))
        ));
        assert!(matches!(
            mittag_leffler(0.5, 1.0, -49.0),
            Err(Error::OutOfRegime(_)) // cancellation guard
        ));
        assert!(mittag_leffler(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn tail_bound_is_honest() {
        // summing 10 more terms changes nothing beyond the reported bound
        for &(a, b, z) in &[(0.5, 1.0, 2.0), (0.7, 0.625, -1.5), (1.0, 1.3, 8.0)] {
            let eval = mittag_leffler_with_tail(a, b, z).unwrap();
            let mut extended = 0.0;
            for k in 0..(eval.terms + 10) {
                let kf = k as f64;
                let mag = (kf * z.abs().max(f64::MIN_POSITIVE).ln() - ln_gamma(a * kf + b)).exp();
                let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
                extended += sign * mag;
            }
            assert!(
                (extended - eval.value).abs() <= eval.tail_bound + 1e-15 * eval.value.abs(),
                "a={a} b={b} z={z}: drift {} bound {}",
                (extended - eval.value).abs(),
                eval.tail_bound
            );
        }
    }

    #[test]
    fn linear_solution_at_lam_zero_is_homogeneous() {
        let params = FhkParams::new(0.5, 1.0 / 3.0, 0.5).unwrap();
        let g = SGrid::uniform(0.5, 1.0, 16).unwrap();
        let traj = linear_solution(&params, 2.0, 0.0, &g).unwrap();
        let want = 2.0 / gamma_fn(params.gamma());
        for v in traj.y_scalar() {
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn caputo_reduction_is_the_one_parameter_function() {
        // gamma = 1, rho = 1, lam = -1: x(t) = x0 E_alpha(-t^alpha)
        let alpha = 0.5;
        let params = FhkParams::new(alpha, 1.0, 1.0).unwrap();
        let g = SGrid::uniform(1.0, 1.0, 64).unwrap();
        let traj = linear_solution(&params, 1.0, -1.0, &g).unwrap();
        for i in (0..g.len()).step_by(13) {
            let t = g.t_at(i);
            let want = mittag_leffler(alpha, 1.0, -t.powf(alpha)).unwrap();
            assert!(
                (traj.y_scalar()[i] - want).abs() <= 1e-12,
                "i={i}: {} vs {want}",
                traj.y_scalar()[i]
            );
        }
    }

    #[test]
    fn series_terms_obey_the_power_rule() {
        // applying the fractional integral to term k and scaling by lam
        // reproduces term k+1; each term is a pure power, so the integral is
        // taken with the power folded into the kernel and is exact
        use crate::quadrature::KernelWeights;
        let params = FhkParams::new(0.6, 0.25, 2.0).unwrap();
        let (alpha, gamma) = (params.alpha(), params.gamma());
        let lam: f64 = 0.8;
        let g = SGrid::uniform(2.0, 1.0, 128).unwrap();
        for k in 0..3i32 {
            let p = alpha * k as f64 + gamma - 1.0;
            let coeff = lam.powi(k) / gamma_fn(alpha * k as f64 + gamma);
            let kw = KernelWeights::build_with_origin_exponent(alpha, p, &g).unwrap();
            let smooth = vec![coeff; g.len()];
            let next_coeff = lam.powi(k + 1) / gamma_fn(alpha * (k + 1) as f64 + gamma);
            for i in (1..g.len()).step_by(37) {
                let s = g.s_at(i);
                let integral = kw.apply_row(i, &smooth).unwrap() / gamma_fn(alpha);
                let got = lam * integral;
                let want = next_coeff * s.powf(alpha * (k + 1) as f64 + gamma - 1.0);
                assert!(
                    ((got - want) / want).abs() <= 1e-10,
                    "k={k} i={i}: {got} vs {want}"
                );
            }
        }
    }
}
