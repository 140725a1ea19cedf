//! Product-integration weights for the Abel kernel `(s_n - w)^(alpha-1)`,
//! the single quadrature engine behind every integral in the library.
//!
//! The rule integrates the piecewise-linear interpolant of the integrand
//! exactly against the kernel, cell by cell, with closed-form antiderivatives.
//! Rows are accumulated left to right in a fixed order so sums are
//! reproducible.
//!
//! Integrands arising from singular solutions carry an integrable power
//! `w^eta` at the origin. Such a factor cannot be represented by a piecewise
//! linear interpolant on a uniform grid without losing an order of accuracy,
//! so the generalized builder moves it into the kernel: weights for
//! `(s_n - w)^(alpha-1) w^eta` applied to the remaining smooth factor. Callers
//! pass the weighted (finite) integrand; see the solver module.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::space::SGrid;

/// Lower-triangular product-integration weights on a grid.
///
/// Row `n` holds the coefficients of `f(s_0) ... f(s_n)` in the approximation
/// of the integral from `0` to `s_n` of `(s_n - w)^(alpha-1) w^eta f(w) dw`
/// where `f` is replaced by its piecewise-linear interpolant. For the plain
/// Abel kernel (`eta = 0`) the row sum is exactly `s_n^alpha / alpha` and the
/// rule reduces to the classical trapezoid rule at `alpha = 1`.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    alpha: f64,
    eta: f64,
    grid: SGrid,
    w: Vec<f64>,
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) || !alpha.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "kernel exponent alpha must satisfy 0 < alpha <= 1, got {alpha}"
        )));
    }
    Ok(())
}

/// `a^p - b^p` for `a >= b >= 0`, stable when the two bases are close.
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b == 0.0 {
        return a.powf(p);
    }
    -(a.powf(p)) * (p * ((b - a) / a).ln_1p()).exp_m1()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Cells much narrower than their distance to both kernel singularities: the
/// incomplete-beta moment differences lose the within-cell split to
/// cancellation there, while the kernel itself is locally smooth.
fn cell_is_narrow(a: f64, b: f64, c: f64) -> bool {
    let d = b - a;
    a > 0.0 && c > b && d <= 1e-4 * a && d <= 1e-4 * (c - b)
}

/// Hat-function moments of `w^eta (c-w)^(alpha-1)` over a narrow cell by
/// two-point Gauss quadrature; exact for cubic kernels, so the relative
/// error is of fourth order in the cell width over the singularity distance.
fn narrow_cell_weights(alpha: f64, eta: f64, c: f64, a: f64, b: f64) -> (f64, f64) {
    let d = b - a;
    let half = 0.5 * d;
    let offs = half / 3.0f64.sqrt();
    let mid = 0.5 * (a + b);
    let mut left = 0.0;
    let mut right = 0.0;
    for w in [mid - offs, mid + offs] {
        let k = w.powf(eta) * (c - w).powf(alpha - 1.0);
        left += half * k * (b - w) / d;
        right += half * k * (w - a) / d;
    }
    (left.max(0.0), right.max(0.0))
}

/// Adds the two hat-weights of one cell for the kernel
/// `w^eta (c-w)^(alpha-1)`, `eta != 0`, to `wl`/`wr`. `reg_lo` caches the
/// regularized-beta values at the cell's lower boundary when the previous
/// cell computed them.
#[allow(clippy::too_many_arguments)]
fn add_weighted_cell(
    alpha: f64,
    eta: f64,
    c: f64,
    a: f64,
    b: f64,
    scale0: f64,
    scale1: f64,
    reg_lo: &mut Option<(f64, f64)>,
    wl: &mut f64,
    wr: &mut f64,
) {
    if cell_is_narrow(a, b, c) {
        let (l, r) = narrow_cell_weights(alpha, eta, c, a, b);
        *wl += l;
        *wr += r;
        *reg_lo = None;
        return;
    }
    let d = b - a;
    let (r0_lo, r1_lo) = reg_lo.unwrap_or_else(|| {
        let xa = (a / c).min(1.0);
        (beta_reg(eta + 1.0, alpha, xa), beta_reg(eta + 2.0, alpha, xa))
    });
    let xb = (b / c).min(1.0);
    let r0_hi = beta_reg(eta + 1.0, alpha, xb);
    let r1_hi = beta_reg(eta + 2.0, alpha, xb);
    let m0 = scale0 * (r0_hi - r0_lo);
    let m1 = scale1 * (r1_hi - r1_lo);
    *wl += ((b * m0 - m1) / d).max(0.0);
    *wr += ((m1 - a * m0) / d).max(0.0);
    *reg_lo = Some((r0_hi, r1_hi));
}

impl KernelWeights {
    /// Weights for the plain Abel kernel `(s_n - w)^(alpha-1)`.
    pub fn build(alpha: f64, grid: &SGrid) -> Result<Self> {
        validate_alpha(alpha)?;
        let s = grid.s();
        let n_nodes = s.len();
        let mut w = vec![0.0; n_nodes * (n_nodes + 1) / 2];
        for n in 1..n_nodes {
            let c = s[n];
            let row = row_offset(n);
            for j in 0..n {
                let (a, b) = (s[j], s[j + 1]);
                let d = b - a;
                let big_a = c - a;
                let big_b = c - b;
                let i0 = pow_diff(big_a, big_b, alpha) / alpha;
                let i1 = pow_diff(big_a, big_b, alpha + 1.0) / (alpha + 1.0);
                w[row + j] += ((i1 - big_b * i0) / d).max(0.0);
                w[row + j + 1] += ((big_a * i0 - i1) / d).max(0.0);
            }
        }
        Ok(Self {
            alpha,
            eta: 0.0,
            grid: grid.clone(),
            w,
        })
    }

    /// Weights for the kernel `(s_n - w)^(alpha-1) w^eta`, `eta > -1`.
    ///
    /// The rule stays exact on piecewise-linear factors multiplying the full
    /// kernel; cell moments come from regularized incomplete beta values.
    pub fn build_with_origin_exponent(alpha: f64, eta: f64, grid: &SGrid) -> Result<Self> {
        validate_alpha(alpha)?;
        if !(eta > -1.0) || !eta.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "origin exponent must satisfy eta > -1, got {eta}"
            )));
        }
        if eta == 0.0 {
            return Self::build(alpha, grid);
        }
        let s = grid.s();
        let n_nodes = s.len();
        let mut w = vec![0.0; n_nodes * (n_nodes + 1) / 2];
        let b0 = ln_beta(eta + 1.0, alpha).exp();
        let b1 = ln_beta(eta + 2.0, alpha).exp();
        for n in 1..n_nodes {
            let c = s[n];
            let row = row_offset(n);
            let scale0 = b0 * c.powf(eta + alpha);
            let scale1 = b1 * c.powf(eta + 1.0 + alpha);
            let mut reg_lo = Some((0.0, 0.0));
            for j in 0..n {
                let (mut wl, mut wr) = (0.0, 0.0);
                add_weighted_cell(
                    alpha, eta, c, s[j], s[j + 1], scale0, scale1, &mut reg_lo, &mut wl, &mut wr,
                );
                w[row + j] += wl;
                w[row + j + 1] += wr;
            }
        }
        Ok(Self {
            alpha,
            eta,
            grid: grid.clone(),
            w,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    /// The weights of row `n` (length `n + 1`).
    pub fn row(&self, n: usize) -> &[f64] {
        &self.w[row_offset(n)..row_offset(n) + n + 1]
    }

    /// Applies row `n` to integrand samples: the sum of `w[n][j] f_j` over
    /// `j <= n`, accumulated in index order.
    pub fn apply_row(&self, n: usize, f: &[f64]) -> Result<f64> {
        if n >= self.grid.len() {
            return Err(Error::IncompatibleInput(format!(
                "row {n} requested on a grid with {} nodes",
                self.grid.len()
            )));
        }
        if f.len() < n + 1 {
            return Err(Error::IncompatibleInput(format!(
                "row {n} needs {} integrand values, got {}",
                n + 1,
                f.len()
            )));
        }
        let row = self.row(n);
        let mut acc = 0.0;
        for j in 0..=n {
            acc += row[j] * f[j];
        }
        Ok(acc)
    }
}

fn row_offset(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Weights of the nodes `s_first ..= s_last` for the integral over the cells
/// between them of `(c - w)^(alpha-1) w^eta f(w) dw`, where the evaluation
/// point `c >= s_last` need not be a grid node.
///
/// Row `k` of the result is the coefficient of `f(s_{first+k})`. The
/// continuation machinery uses this both for history integrals evaluated at
/// new nodes (`first = 0`) and for the active-step cells of each row.
pub fn segment_weights(
    alpha: f64,
    eta: f64,
    s: &[f64],
    first: usize,
    last: usize,
    c: f64,
) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    if !(eta > -1.0) || !eta.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "origin exponent must satisfy eta > -1, got {eta}"
        )));
    }
    if last >= s.len() || first > last {
        return Err(Error::IncompatibleInput(format!(
            "segment {first}..={last} on {} nodes",
            s.len()
        )));
    }
    if !(c >= s[last]) {
        return Err(Error::ParameterDomain(format!(
            "evaluation point {c} lies left of the segment end {}",
            s[last]
        )));
    }
    let mut w = vec![0.0; last - first + 1];
    if eta == 0.0 {
        for j in first..last {
            let (a, b) = (s[j], s[j + 1]);
            let d = b - a;
            let big_a = c - a;
            let big_b = c - b;
            let i0 = pow_diff(big_a, big_b, alpha) / alpha;
            let i1 = pow_diff(big_a, big_b, alpha + 1.0) / (alpha + 1.0);
            w[j - first] += ((i1 - big_b * i0) / d).max(0.0);
            w[j - first + 1] += ((big_a * i0 - i1) / d).max(0.0);
        }
    } else {
        let scale0 = ln_beta(eta + 1.0, alpha).exp() * c.powf(eta + alpha);
        let scale1 = ln_beta(eta + 2.0, alpha).exp() * c.powf(eta + 1.0 + alpha);
        let mut reg_lo = None;
        for j in first..last {
            let (mut wl, mut wr) = (0.0, 0.0);
            add_weighted_cell(
                alpha, eta, c, s[j], s[j + 1], scale0, scale1, &mut reg_lo, &mut wl, &mut wr,
            );
            w[j - first] += wl;
            w[j - first + 1] += wr;
        }
    }
    Ok(w)
}

/// Weights of the nodes `s_0 ..= s_upto` for the partial integral from `0` to
/// `s_upto`, evaluated at a point `c >= s_upto` that need not be a grid node.
pub fn prefix_weights(alpha: f64, eta: f64, s: &[f64], upto: usize, c: f64) -> Result<Vec<f64>> {
    segment_weights(alpha, eta, s, 0, upto, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SGrid;
    use statrs::function::gamma::gamma as gamma_fn;

    fn uniform_grid(n: usize) -> SGrid {
        SGrid::uniform(1.0, 1.0, n).unwrap()
    }

    #[test]
    fn alpha_one_reduces_to_trapezoid() {
        let g = uniform_grid(4);
        let kw = KernelWeights::build(1.0, &g).unwrap();
        let h = 0.25;
        let r1 = kw.row(1);
        assert!((r1[0] - h / 2.0).abs() < 1e-15);
        assert!((r1[1] - h / 2.0).abs() < 1e-15);
        let r3 = kw.row(3);
        let expect = [h / 2.0, h, h, h / 2.0];
        for (a, b) in r3.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_interval_half_order_row() {
        // Beta-integral oracle, frozen before the build:
        //   integral of (1-w)^(-1/2) (1-w) over [0,1] = 2/3   (node 0)
        //   integral of (1-w)^(-1/2) w    over [0,1] = 4/3    (node 1)
        let g = SGrid::from_s_nodes(1.0, vec![0.0, 1.0]).unwrap();
        let kw = KernelWeights::build(0.5, &g).unwrap();
        let r = kw.row(1);
        assert!((r[0] - 2.0 / 3.0).abs() < 1e-14, "node 0 weight {}", r[0]);
        assert!((r[1] - 4.0 / 3.0).abs() < 1e-14, "node 1 weight {}", r[1]);
    }

    #[test]
    fn row_sums_integrate_constants_exactly() {
        for &alpha in &[0.3, 0.5, 0.77, 1.0] {
            let g = SGrid::graded(2.0, 1.3, 40, 2.0).unwrap();
            let kw = KernelWeights::build(alpha, &g).unwrap();
            for n in 1..g.len() {
                let sum: f64 = kw.row(n).iter().sum();
                let exact = g.s_at(n).powf(alpha) / alpha;
                assert!(
                    (sum - exact).abs() <= 1e-12 * exact.max(1.0),
                    "alpha={alpha} n={n} sum={sum} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn weights_are_nonnegative() {
        for &alpha in &[0.2, 0.5, 1.0] {
            let g = uniform_grid(24);
            let kw = KernelWeights::build(alpha, &g).unwrap();
            assert!(kw.w.iter().all(|&v| v >= 0.0));
            let kws = KernelWeights::build_with_origin_exponent(alpha, -0.4, &g).unwrap();
            assert!(kws.w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn apply_row_examples() {
        let g = uniform_grid(8);
        let kw = KernelWeights::build(0.5, &g).unwrap();
        let zeros = vec![0.0; 9];
        assert_eq!(kw.apply_row(8, &zeros).unwrap(), 0.0);
        // f == 1 at s_n = 1: row-sum identity 1^(1/2) / (1/2) = 2
        let ones = vec![1.0; 9];
        assert!((kw.apply_row(8, &ones).unwrap() - 2.0).abs() < 1e-13);
        // f == s is piecewise linear, so the rule is exact: B(2, 1/2) = 4/3
        let lin: Vec<f64> = g.s().to_vec();
        assert!((kw.apply_row(8, &lin).unwrap() - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn apply_row_rejects_short_input() {
        let g = uniform_grid(4);
        let kw = KernelWeights::build(0.5, &g).unwrap();
        assert!(matches!(
            kw.apply_row(3, &[1.0, 2.0]),
            Err(Error::IncompatibleInput(_))
        ));
        assert!(kw.apply_row(9, &[0.0; 16]).is_err());
    }

    #[test]
    fn rejects_bad_exponents() {
        let g = uniform_grid(4);
        assert!(KernelWeights::build(0.0, &g).is_err());
        assert!(KernelWeights::build(1.5, &g).is_err());
        assert!(KernelWeights::build_with_origin_exponent(0.5, -1.0, &g).is_err());
    }

    #[test]
    fn origin_exponent_zero_matches_plain_path() {
        let g = SGrid::graded(0.5, 1.1, 20, 2.0).unwrap();
        let plain = KernelWeights::build(0.4, &g).unwrap();
        // force the beta-function route by a tiny nonzero exponent
        let near = KernelWeights::build_with_origin_exponent(0.4, 1e-13, &g).unwrap();
        for n in 1..g.len() {
            for (a, b) in plain.row(n).iter().zip(near.row(n)) {
                assert!((a - b).abs() <= 1e-9 * (a.abs() + 1e-30) + 1e-15);
            }
        }
    }

    #[test]
    fn generalized_row_sum_identity() {
        // f == 1 integrates to B(eta+1, alpha) s_n^(alpha+eta)
        let g = uniform_grid(16);
        for &(alpha, eta) in &[(0.5, -0.5), (0.3, -0.7), (0.8, 0.6)] {
            let kw = KernelWeights::build_with_origin_exponent(alpha, eta, &g).unwrap();
            for n in (1..g.len()).step_by(5) {
                let sum: f64 = kw.row(n).iter().sum();
                let exact = gamma_fn(eta + 1.0) * gamma_fn(alpha) / gamma_fn(eta + 1.0 + alpha)
                    * g.s_at(n).powf(alpha + eta);
                assert!(
                    (sum - exact).abs() <= 1e-11 * exact.max(1.0),
                    "alpha={alpha} eta={eta} n={n}: {sum} vs {exact}"
                );
            }
        }
    }

    /// Composite-Simpson oracle for the integral of
    /// `(c - w)^(alpha-1) w^eta f(w)` over `[lo, hi]` after the substitution
    /// `v = (c - w)^alpha`, which removes the kernel singularity at `w = c`.
    fn simpson_oracle(
        alpha: f64,
        eta: f64,
        c: f64,
        lo: f64,
        hi: f64,
        f: &dyn Fn(f64) -> f64,
    ) -> f64 {
        let v_lo = (c - hi).powf(alpha);
        let v_hi = (c - lo).powf(alpha);
        let g = |v: f64| {
            let w = c - v.powf(1.0 / alpha);
            let w = w.clamp(0.0, c);
            w.powf(eta) * f(w) / alpha
        };
        let n = 20000;
        let h = (v_hi - v_lo) / n as f64;
        let mut acc = g(v_lo) + g(v_hi);
        for i in 1..n {
            let v = v_lo + h * i as f64;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(v);
        }
        acc * h / 3.0
    }

    #[test]
    fn rows_integrate_piecewise_linear_functions_exactly() {
        let g = SGrid::from_s_nodes(1.0, vec![0.0, 0.13, 0.3, 0.55, 0.8, 1.05]).unwrap();
        let alpha = 0.6;
        let kw = KernelWeights::build(alpha, &g).unwrap();
        let vals = [0.4, -1.2, 0.7, 2.2, -0.3, 1.9];
        let n = 5;
        let approx = kw.apply_row(n, &vals).unwrap();
        // oracle: integrate the interpolant cell by cell with the kernel
        let mut exact = 0.0;
        let c = g.s_at(n);
        for j in 0..n {
            let (a, b) = (g.s_at(j), g.s_at(j + 1));
            let (fa, fb) = (vals[j], vals[j + 1]);
            let f = move |w: f64| fa + (fb - fa) * (w - a) / (b - a);
            exact += simpson_oracle(alpha, 0.0, c, a, b, &f);
        }
        assert!(
            (approx - exact).abs() <= 1e-9 * (1.0 + exact.abs()),
            "{approx} vs {exact}"
        );
    }

    #[test]
    fn pure_power_is_exact_through_the_origin_kernel() {
        // integral of (1-w)^(alpha-1) w^(gamma-1) over [0,1] = B(gamma, alpha)
        let g = uniform_grid(64);
        for &(alpha, gam) in &[(0.5, 0.5), (0.3, 0.3), (0.7, 0.45)] {
            let kw = KernelWeights::build_with_origin_exponent(alpha, gam - 1.0, &g).unwrap();
            let ones = vec![1.0; g.len()];
            let got = kw.apply_row(g.len() - 1, &ones).unwrap();
            let exact = gamma_fn(gam) * gamma_fn(alpha) / gamma_fn(gam + alpha);
            assert!(
                (got - exact).abs() <= 1e-12 * exact,
                "alpha={alpha} gamma={gam}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn convergence_order_on_singular_integrands() {
        // integrand w^(gamma-1) cos(w) against the Abel kernel: the singular
        // power joins the kernel, cos is interpolated. Expected order is at
        // least min(2, 1 + alpha).
        let alpha = 0.5;
        let gam = 0.5;
        // reference value by rapidly converging series:
        // sum_k (-1)^k B(gamma + 2k, alpha) / (2k)!
        let mut exact = 0.0;
        let mut sign = 1.0;
        let mut fact = 1.0;
        for k in 0..40 {
            let p = gam + 2.0 * k as f64;
            exact += sign * gamma_fn(p) * gamma_fn(alpha) / gamma_fn(p + alpha) / fact;
            sign = -sign;
            fact *= (2 * k + 1) as f64 * (2 * k + 2) as f64;
        }
        let mut errs = Vec::new();
        for &n in &[64usize, 128, 256, 512] {
            let g = uniform_grid(n);
            let kw = KernelWeights::build_with_origin_exponent(alpha, gam - 1.0, &g).unwrap();
            let f: Vec<f64> = g.s().iter().map(|w| w.cos()).collect();
            let got = kw.apply_row(n, &f).unwrap();
            errs.push((got - exact).abs());
        }
        for win in errs.windows(2) {
            let slope = (win[0] / win[1]).log2();
            assert!(
                slope >= (2.0f64).min(1.0 + alpha) - 0.1,
                "slope {slope} errs {errs:?}"
            );
        }
    }

    #[test]
    fn prefix_weights_match_full_rows_on_grid_points() {
        let g = SGrid::graded(1.0, 1.0, 12, 1.5).unwrap();
        for &eta in &[0.0, -0.5] {
            let kw = KernelWeights::build_with_origin_exponent(0.5, eta, &g).unwrap();
            let n = 9;
            let pw = prefix_weights(0.5, eta, g.s(), n, g.s_at(n)).unwrap();
            for (a, b) in pw.iter().zip(kw.row(n)) {
                assert!((a - b).abs() <= 1e-12 * (b.abs() + 1e-30) + 1e-16);
            }
        }
    }

    #[test]
    fn prefix_weights_integrate_history_segments() {
        // partial integral of (c - w)^(alpha-1) f(w) over [0, s_m] at an
        // off-grid evaluation point c
        let g = SGrid::uniform(1.0, 1.0, 10).unwrap();
        let alpha = 0.5;
        let m = 6;
        let c = 1.37;
        let pw = prefix_weights(alpha, 0.0, g.s(), m, c).unwrap();
        let vals: Vec<f64> = g.s().iter().map(|w| 1.0 + 2.0 * w).collect();
        let got: f64 = pw.iter().zip(&vals).map(|(w, f)| w * f).sum();
        let f = |w: f64| 1.0 + 2.0 * w;
        let exact = simpson_oracle(alpha, 0.0, c, 0.0, g.s_at(m), &f);
        assert!((got - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
    }
}
