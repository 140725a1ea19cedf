//! The equivalent second-kind Volterra integral equation and its Picard
//! fixed-point solver, with the explicit local-existence radius and a sampled
//! bound estimator for the regularized right-hand side.
//!
//! The weighted form of the equation on the transformed grid reads
//!
//! ```text
//! y(s) = x0 / Gamma(gamma) + s^(1-gamma) / Gamma(alpha)
//!          * integral over (0, s) of (s - w)^(alpha-1) phi(t(w), x(w)) dw
//! ```
//!
//! The composed integrand carries a `w^(-lambda/rho)` origin singularity, so
//! the solver splits it as `w^(-nu) * F(w)` with `nu = lambda / rho` and the
//! finite regularized factor `F(w) = w^nu phi(t(w), x(w))`, and integrates the
//! singular power exactly through the origin-exponent kernel weights. The
//! origin value `F(0)` is taken from a one-sided probe at the first grid node
//! scaled by `1e-3`.
//!
//! Picard iteration stands in for the non-constructive fixed-point existence
//! argument; non-convergence is reported in the result, never hidden.

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::quadrature::KernelWeights;
use crate::space::{
    s_of_t, weighted_distance, CauchyProblem, FhkParams, Mesh, SGrid, WeightedTrajectory,
};

/// Iteration controls for the fixed-point solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Weighted-norm convergence tolerance between successive iterates.
    pub tol: f64,
    /// Picard iteration cap.
    pub max_iter: usize,
    /// Number of grid intervals.
    pub n: usize,
    /// Node layout of the solve grid.
    pub mesh: Mesh,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            n: 256,
            mesh: Mesh::Uniform,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::ParameterDomain("max_iter must be at least 1".into()));
        }
        if self.n < 8 {
            return Err(Error::ParameterDomain(format!(
                "grid size must be at least 8, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Outcome of a fixed-point solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub traj: WeightedTrajectory,
    pub iterations: usize,
    /// Final weighted distance between successive iterates.
    pub residual: f64,
    pub converged: bool,
    /// The explicit local-existence radius, when its formula applies to this
    /// problem (`lambda < 1` and `alpha - gamma - lambda + 1 > 0`).
    pub h_local: Option<f64>,
    /// Largest weighted deviation of any iterate from the initial anchor
    /// `x0 / Gamma(gamma)`; the discrete ball-invariance witness.
    pub max_deviation: f64,
}

/// Default ball radius: `max(1, |x0| / Gamma(gamma))`, scaling with the data.
pub fn default_ball_radius(problem: &CauchyProblem) -> f64 {
    let anchor = problem
        .x0()
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        / gamma_fn(problem.params().gamma());
    anchor.max(1.0)
}

/// The regularized integrand factor `F_j = s_j^nu phi(t_j, x_j)` on a grid,
/// with the origin value probed at `t_1 * 1e-3`.
pub(crate) fn regularized_factor(
    problem: &CauchyProblem,
    grid: &SGrid,
    y: &[Vec<f64>],
    j: usize,
) -> Result<Vec<f64>> {
    let params = problem.params();
    let (gamma, rho) = (params.gamma(), params.rho());
    let nu = problem.lambda() / rho;
    let (t, s) = if j == 0 {
        let tp = grid.t_at(1) * 1e-3;
        (tp, s_of_t(rho, tp))
    } else {
        (grid.t_at(j), grid.s_at(j))
    };
    let xfac = if gamma == 1.0 { 1.0 } else { s.powf(gamma - 1.0) };
    let x: Vec<f64> = y[j].iter().map(|v| xfac * v).collect();
    let phi = problem.eval_rhs(t, &x)?;
    let scale = if nu == 0.0 { 1.0 } else { s.powf(nu) };
    Ok(phi.into_iter().map(|v| scale * v).collect())
}

pub(crate) fn anchor_values(problem: &CauchyProblem) -> Vec<f64> {
    let g = gamma_fn(problem.params().gamma());
    problem.x0().iter().map(|v| v / g).collect()
}

/// One application of the weighted integral operator to a trajectory.
pub fn volterra_rhs(
    problem: &CauchyProblem,
    traj: &WeightedTrajectory,
) -> Result<WeightedTrajectory> {
    let grid = traj.grid();
    if grid.t_end() > problem.horizon() * (1.0 + 1e-12) {
        return Err(Error::ParameterDomain(format!(
            "trajectory extends to t = {} beyond the horizon {}",
            grid.t_end(),
            problem.horizon()
        )));
    }
    let nu = problem.lambda() / problem.params().rho();
    let weights = KernelWeights::build_with_origin_exponent(problem.params().alpha(), -nu, grid)?;
    let y_new = apply_operator(problem, grid, &weights, traj.y())?;
    WeightedTrajectory::new(*problem.params(), grid.clone(), y_new)
}

/// Shared core: applies the integral operator through prebuilt weights.
fn apply_operator(
    problem: &CauchyProblem,
    grid: &SGrid,
    weights: &KernelWeights,
    y: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let params = problem.params();
    let (alpha, gamma) = (params.alpha(), params.gamma());
    let dim = problem.dim();
    let n_nodes = grid.len();
    let anchor = anchor_values(problem);
    let inv_gamma_alpha = 1.0 / gamma_fn(alpha);

    let mut f_vals: Vec<Vec<f64>> = Vec::with_capacity(n_nodes);
    for j in 0..n_nodes {
        f_vals.push(regularized_factor(problem, grid, y, j)?);
    }
    let mut out = vec![anchor.clone(); n_nodes];
    for i in 1..n_nodes {
        let sfac = if gamma == 1.0 {
            1.0
        } else {
            grid.s_at(i).powf(1.0 - gamma)
        } * inv_gamma_alpha;
        let row = weights.row(i);
        for d in 0..dim {
            let mut acc = 0.0;
            for (j, w) in row.iter().enumerate() {
                acc += w * f_vals[j][d];
            }
            out[i][d] = anchor[d] + sfac * acc;
        }
    }
    Ok(out)
}

fn solve_on_grid(
    problem: &CauchyProblem,
    opts: &SolveOptions,
    grid: SGrid,
    initial: Vec<Vec<f64>>,
) -> Result<SolveReport> {
    let params = *problem.params();
    let nu = problem.lambda() / params.rho();
    let weights = KernelWeights::build_with_origin_exponent(params.alpha(), -nu, &grid)?;
    let anchor = anchor_values(problem);

    let mut y = initial;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut max_deviation = deviation(&y, &anchor);
    for _ in 0..opts.max_iter {
        let y_next = match apply_operator(problem, &grid, &weights, &y) {
            Ok(v) => v,
            Err(Error::RhsEvaluation { reason, .. })
                if reason.contains("non-finite") && iterations > 0 =>
            {
                // divergence to overflow is non-convergence, not a crash
                residual = f64::INFINITY;
                break;
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let mut dist = 0.0f64;
        for (row_new, row_old) in y_next.iter().zip(&y) {
            for (a, b) in row_new.iter().zip(row_old) {
                dist = dist.max((a - b).abs());
            }
        }
        max_deviation = max_deviation.max(deviation(&y_next, &anchor));
        y = y_next;
        residual = dist;
        if !dist.is_finite() {
            break;
        }
        if dist < opts.tol {
            converged = true;
            break;
        }
    }

    let h_local = implied_radius(problem, &grid);
    let traj = WeightedTrajectory::new(params, grid, y)?;
    Ok(SolveReport {
        traj,
        iterations,
        residual,
        converged,
        h_local,
        max_deviation,
    })
}

fn deviation(y: &[Vec<f64>], anchor: &[f64]) -> f64 {
    let mut d = 0.0f64;
    for row in y {
        for (v, a) in row.iter().zip(anchor) {
            d = d.max((v - a).abs());
        }
    }
    d
}

fn implied_radius(problem: &CauchyProblem, grid: &SGrid) -> Option<f64> {
    let k = default_ball_radius(problem);
    let l = estimate_l(problem, k, grid).ok()?;
    local_radius(k, l, problem.lambda(), problem.params(), problem.horizon()).ok()
}

/// Picard iteration from the anchor `y = x0 / Gamma(gamma)` on `[0, h]`.
pub fn picard_solve(problem: &CauchyProblem, opts: &SolveOptions, h: f64) -> Result<SolveReport> {
    opts.validate()?;
    if !(h > 0.0) || h > problem.horizon() * (1.0 + 1e-12) {
        return Err(Error::ParameterDomain(format!(
            "solve interval (0, {h}] must be positive and within the horizon {}",
            problem.horizon()
        )));
    }
    let grid = opts.mesh.build(problem.params().rho(), h, opts.n)?;
    let anchor = anchor_values(problem);
    let initial = vec![anchor; grid.len()];
    solve_on_grid(problem, opts, grid, initial)
}

/// Picard iteration from a constant initial guess offset from the anchor.
pub fn picard_solve_from_offset(
    problem: &CauchyProblem,
    opts: &SolveOptions,
    h: f64,
    offset: f64,
) -> Result<SolveReport> {
    opts.validate()?;
    if !(h > 0.0) || h > problem.horizon() * (1.0 + 1e-12) {
        return Err(Error::ParameterDomain(format!(
            "solve interval (0, {h}] must be positive and within the horizon {}",
            problem.horizon()
        )));
    }
    let grid = opts.mesh.build(problem.params().rho(), h, opts.n)?;
    let anchor: Vec<f64> = anchor_values(problem).iter().map(|v| v + offset).collect();
    let initial = vec![anchor; grid.len()];
    solve_on_grid(problem, opts, grid, initial)
}

/// System solve: identical machinery with component-wise operators and the
/// max-over-components weighted norm. The reported radius uses the largest
/// component bound, which realizes the min over per-component radii.
pub fn picard_solve_system(
    problem: &CauchyProblem,
    opts: &SolveOptions,
    h: f64,
) -> Result<SolveReport> {
    picard_solve(problem, opts, h)
}

/// The explicit local-existence radius
/// `min{ (k rho^(alpha-gamma+1) Gamma(alpha-lambda+1) / (L Gamma(1-lambda)))
///        ^(1 / (rho (alpha-gamma-lambda+1))), T }`.
///
/// Requires `0 <= lambda < 1` and a positive exponent
/// `alpha - gamma - lambda + 1`; the boundary case is rejected rather than
/// guessed at.
pub fn local_radius(k: f64, l: f64, lambda: f64, params: &FhkParams, t_max: f64) -> Result<f64> {
    if !(k > 0.0) || !(l > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "ball radius and bound must be positive, got k={k}, L={l}"
        )));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::ParameterDomain(format!(
            "the radius formula needs 0 <= lambda < 1, got {lambda}"
        )));
    }
    if !(t_max > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "horizon must be positive, got {t_max}"
        )));
    }
    let (alpha, gamma, rho) = (params.alpha(), params.gamma(), params.rho());
    let exponent = alpha - gamma - lambda + 1.0;
    if !(exponent > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "radius formula needs alpha - gamma - lambda + 1 > 0, got {exponent}"
        )));
    }
    let base = k * rho.powf(alpha - gamma + 1.0) * gamma_fn(alpha - lambda + 1.0)
        / (l * gamma_fn(1.0 - lambda));
    Ok(base.powf(1.0 / (rho * exponent)).min(t_max))
}

/// Sampled upper estimate of `sup |t^lambda phi(t, x)|` over the grid nodes
/// and weighted values within distance `k` of the anchor (three samples per
/// component: anchor and anchor +- k). An estimate, not a certificate.
pub fn estimate_l(problem: &CauchyProblem, k: f64, grid: &SGrid) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "ball radius must be positive, got {k}"
        )));
    }
    let params = problem.params();
    let gamma = params.gamma();
    let lambda = problem.lambda();
    let anchor = anchor_values(problem);
    let dim = problem.dim();
    let combos = 3usize.pow(dim.min(6) as u32);
    let mut best = 0.0f64;
    for j in 1..grid.len() {
        let t = grid.t_at(j);
        let s = grid.s_at(j);
        let xfac = if gamma == 1.0 { 1.0 } else { s.powf(gamma - 1.0) };
        let tfac = if lambda == 0.0 { 1.0 } else { t.powf(lambda) };
        for combo in 0..combos {
            let mut x = vec![0.0; dim];
            let mut c = combo;
            for (d, xd) in x.iter_mut().enumerate() {
                let pick = if d < 6 {
                    let p = c % 3;
                    c /= 3;
                    p
                } else {
                    1
                };
                let y = match pick {
                    0 => anchor[d] - k,
                    1 => anchor[d],
                    _ => anchor[d] + k,
                };
                *xd = xfac * y;
            }
            let phi = problem.eval_rhs(t, &x)?;
            for v in phi {
                best = best.max(tfac * v.abs());
            }
        }
    }
    Ok(best)
}

/// Sup-norm residual of the discrete integral equation along a trajectory.
pub fn volterra_residual(problem: &CauchyProblem, traj: &WeightedTrajectory) -> Result<f64> {
    let image = volterra_rhs(problem, traj)?;
    weighted_distance(traj, &image)
}

/// Runs the solver twice from distinct constant initial guesses (the anchor
/// and the anchor shifted by `k/2`) and returns both reports together with
/// the weighted distance between the converged trajectories.
pub fn uniqueness_probe(
    problem: &CauchyProblem,
    opts: &SolveOptions,
    h: f64,
    k: f64,
) -> Result<(SolveReport, SolveReport, f64)> {
    let a = picard_solve(problem, opts, h)?;
    let b = picard_solve_from_offset(problem, opts, h, k / 2.0)?;
    let d = weighted_distance(&a.traj, &b.traj)?;
    Ok((a, b, d))
}
