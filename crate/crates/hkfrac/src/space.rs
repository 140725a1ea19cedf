//! Domain types shared by every module: the order triple, grids in the
//! transformed variable, weighted trajectories, and problem definitions.
//!
//! All internal computation runs in the transformed variable `s = t^rho / rho`.
//! Under the substitution `w = tau^rho / rho` the generalized integral kernel
//! `tau^(rho-1) (t^rho - tau^rho)^(alpha-1)` collapses to the classical Abel
//! kernel `(s - w)^(alpha-1)` up to a power of `rho`, and the scaled derivative
//! `t^(1-rho) d/dt` collapses to `d/ds`, so one quadrature and one
//! differentiation code path serve every `rho`.
//!
//! Solutions are stored only in weighted form `y = s^(1-gamma) x`; the raw
//! value `x` generally diverges at the origin when `gamma < 1`, while the
//! weighted representative is continuous on the closed interval.

use std::sync::Arc;

use crate::error::{Error, Result};

/// The order triple `(alpha, beta, rho)` with its derived type index
/// `gamma = alpha + beta (1 - alpha)`.
///
/// `gamma` governs the boundary behaviour of solutions: the raw solution
/// behaves like `(t^rho / rho)^(gamma - 1)` near the origin, so `beta = 1`
/// (`gamma = 1`) gives bounded solutions and `beta = 0` (`gamma = alpha`)
/// gives the strongest admissible singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhkParams {
    alpha: f64,
    beta: f64,
    rho: f64,
    gamma: f64,
}

/// Computes the type index `gamma = alpha + beta (1 - alpha)`.
///
/// Requires `0 < alpha < 1` and `0 <= beta <= 1`; the result always lies in
/// `[alpha, 1]`, hitting the endpoints at `beta = 0` and `beta = 1`.
pub fn derive_gamma(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "alpha must satisfy 0 < alpha < 1, got {alpha}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "beta must satisfy 0 <= beta <= 1, got {beta}"
        )));
    }
    Ok(alpha + beta * (1.0 - alpha))
}

impl FhkParams {
    /// Validates the triple and derives `gamma`.
    pub fn new(alpha: f64, beta: f64, rho: f64) -> Result<Self> {
        let gamma = derive_gamma(alpha, beta)?;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            rho,
            gamma,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The derived type index `gamma = alpha + beta (1 - alpha)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// A strictly increasing grid `0 = s_0 < s_1 < ... < s_N` in the transformed
/// variable `s = t^rho / rho`, together with the scale `rho` needed to map
/// nodes back to the original variable `t = (rho s)^(1/rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SGrid {
    rho: f64,
    s: Vec<f64>,
}

impl SGrid {
    /// Builds a grid from explicit `s` nodes. The first node must be exactly
    /// zero and the sequence strictly increasing.
    pub fn from_s_nodes(rho: f64, s: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "rho must be positive, got {rho}"
            )));
        }
        if s.is_empty() {
            return Err(Error::InsufficientGrid("grid has no nodes".into()));
        }
        if s[0] != 0.0 {
            return Err(Error::ParameterDomain(format!(
                "first grid node must be exactly 0, got {}",
                s[0]
            )));
        }
        for pair in s.windows(2) {
            if !(pair[1] > pair[0]) || !pair[1].is_finite() {
                return Err(Error::ParameterDomain(format!(
                    "grid nodes must be finite and strictly increasing, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        Ok(Self { rho, s })
    }

    /// Uniform grid in `s` over `[0, t_end^rho / rho]` with `n` intervals.
    pub fn uniform(rho: f64, t_end: f64, n: usize) -> Result<Self> {
        Self::graded(rho, t_end, n, 1.0)
    }

    /// Graded grid `s_j = s_end (j/n)^r`. Grading `r > 1` clusters nodes near
    /// the origin, which restores accuracy when the weighted solution carries
    /// a `s^alpha` startup term; `r = 1` is the uniform default.
    pub fn graded(rho: f64, t_end: f64, n: usize, r: f64) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        if n < 1 {
            return Err(Error::InsufficientGrid(
                "grid needs at least one interval".into(),
            ));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "grading exponent must be >= 1, got {r}"
            )));
        }
        let s_end = s_of_t(rho, t_end);
        let s = (0..=n)
            .map(|j| {
                if j == n {
                    s_end
                } else {
                    s_end * ((j as f64) / (n as f64)).powf(r)
                }
            })
            .collect();
        Self::from_s_nodes(rho, s)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of nodes (intervals + 1).
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn s_at(&self, i: usize) -> f64 {
        self.s[i]
    }

    /// Maps node `i` back to the original variable, `t_i = (rho s_i)^(1/rho)`.
    pub fn t_at(&self, i: usize) -> f64 {
        t_of_s(self.rho, self.s[i])
    }

    pub fn t_end(&self) -> f64 {
        self.t_at(self.len() - 1)
    }

    /// Composite grid: a quarter of the nodes graded with exponent `r` into
    /// the first eighth of the `s`-range, uniform spacing across the bulk.
    /// Resolves an origin singularity without starving the far field.
    pub fn graded_start(rho: f64, t_end: f64, n: usize, r: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InsufficientGrid(
                "composite grid needs at least 8 intervals".into(),
            ));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "grading exponent must be >= 1, got {r}"
            )));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        let s_end = s_of_t(rho, t_end);
        let split = s_end / 8.0;
        let nl = n / 4;
        let nm = n - nl;
        let mut s = Vec::with_capacity(n + 1);
        for j in 0..=nl {
            s.push(split * ((j as f64) / (nl as f64)).powf(r));
        }
        for j in 1..=nm {
            let v = if j == nm {
                s_end
            } else {
                split + (s_end - split) * j as f64 / nm as f64
            };
            s.push(v);
        }
        Self::from_s_nodes(rho, s)
    }

    /// New grid that keeps every node and appends `m` uniform-in-`s` nodes on
    /// `(s_last, s_to]`.
    pub fn extended_to_s(&self, s_to: f64, m: usize) -> Result<Self> {
        let s_last = *self.s.last().expect("grid is never empty");
        if !(s_to > s_last) {
            return Err(Error::ParameterDomain(format!(
                "extension endpoint {s_to} must exceed the last node {s_last}"
            )));
        }
        if m < 1 {
            return Err(Error::InsufficientGrid(
                "extension needs at least one node".into(),
            ));
        }
        let mut s = self.s.clone();
        let dh = (s_to - s_last) / m as f64;
        for j in 1..=m {
            let v = if j == m { s_to } else { s_last + dh * j as f64 };
            s.push(v);
        }
        Self::from_s_nodes(self.rho, s)
    }
}

/// Node layout of a solver grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mesh {
    /// Uniform in the transformed variable.
    Uniform,
    /// `s_j = s_end (j/n)^r` over the whole interval.
    Graded { r: f64 },
    /// Graded start, uniform bulk; see [`SGrid::graded_start`].
    GradedStart { r: f64 },
}

impl Mesh {
    pub fn build(&self, rho: f64, t_end: f64, n: usize) -> Result<SGrid> {
        match *self {
            Mesh::Uniform => SGrid::uniform(rho, t_end, n),
            Mesh::Graded { r } => SGrid::graded(rho, t_end, n, r),
            Mesh::GradedStart { r } => SGrid::graded_start(rho, t_end, n, r),
        }
    }
}

/// `s = t^rho / rho`.
pub fn s_of_t(rho: f64, t: f64) -> f64 {
    if rho == 1.0 {
        t
    } else {
        t.powf(rho) / rho
    }
}

/// `t = (rho s)^(1/rho)`.
pub fn t_of_s(rho: f64, s: f64) -> f64 {
    if rho == 1.0 {
        s
    } else {
        (rho * s).powf(1.0 / rho)
    }
}

/// A grid plus weighted solution values `y_i = s_i^(1-gamma) x(t_i)`, the
/// continuous representative of a possibly singular solution. For systems,
/// each node holds one value per component.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTrajectory {
    params: FhkParams,
    grid: SGrid,
    y: Vec<Vec<f64>>,
}

impl WeightedTrajectory {
    pub fn new(params: FhkParams, grid: SGrid, y: Vec<Vec<f64>>) -> Result<Self> {
        if y.len() != grid.len() {
            return Err(Error::IncompatibleInput(format!(
                "trajectory has {} value rows for {} grid nodes",
                y.len(),
                grid.len()
            )));
        }
        let dim = y.first().map(|v| v.len()).unwrap_or(0);
        if y.iter().any(|v| v.len() != dim) {
            return Err(Error::IncompatibleInput(
                "trajectory rows have inconsistent dimension".into(),
            ));
        }
        if let Some(first) = y.first() {
            if first.iter().any(|v| !v.is_finite()) {
                return Err(Error::ParameterDomain(
                    "weighted value at the origin must be finite".into(),
                ));
            }
        }
        Ok(Self { params, grid, y })
    }

    /// Scalar convenience constructor.
    pub fn from_scalar(params: FhkParams, grid: SGrid, y: Vec<f64>) -> Result<Self> {
        let y = y.into_iter().map(|v| vec![v]).collect();
        Self::new(params, grid, y)
    }

    pub fn params(&self) -> &FhkParams {
        &self.params
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    pub fn y(&self) -> &[Vec<f64>] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.y.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Scalar view of component 0.
    pub fn y_scalar(&self) -> Vec<f64> {
        self.y.iter().map(|v| v[0]).collect()
    }

    /// Raw values `x(t_i) = s_i^(gamma-1) y_i`. At the origin the raw value is
    /// only defined when `gamma = 1`; otherwise `None`.
    pub fn raw_x(&self, i: usize) -> Option<Vec<f64>> {
        let gamma = self.params.gamma();
        if i == 0 {
            if gamma == 1.0 {
                Some(self.y[0].clone())
            } else {
                None
            }
        } else {
            let f = self.grid.s_at(i).powf(gamma - 1.0);
            Some(self.y[i].iter().map(|v| f * v).collect())
        }
    }
}

/// Sup of the weighted values over the grid, component-wise maximum for
/// systems. This is the norm of the weighted space the solvers work in.
pub fn weighted_norm(traj: &WeightedTrajectory) -> Result<f64> {
    let mut best: Option<f64> = None;
    for row in traj.y() {
        for v in row {
            let a = v.abs();
            best = Some(best.map_or(a, |b: f64| b.max(a)));
        }
    }
    best.ok_or_else(|| Error::EmptyDomain("weighted norm of a trajectory with no values".into()))
}

/// Sup distance `max_i |y_i^a - y_i^b|` between two trajectories on the same
/// grid with the same orders and dimension.
pub fn weighted_distance(a: &WeightedTrajectory, b: &WeightedTrajectory) -> Result<f64> {
    if a.params() != b.params() {
        return Err(Error::IncompatibleTrajectories(
            "order parameters differ".into(),
        ));
    }
    if a.grid() != b.grid() {
        return Err(Error::IncompatibleTrajectories("grids differ".into()));
    }
    if a.dim() != b.dim() || a.dim() == 0 {
        return Err(Error::IncompatibleTrajectories(format!(
            "dimensions differ or are zero: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut best = 0.0f64;
    for (ra, rb) in a.y().iter().zip(b.y()) {
        for (va, vb) in ra.iter().zip(rb) {
            best = best.max((va - vb).abs());
        }
    }
    Ok(best)
}

type RhsFn = dyn Fn(f64, &[f64], &mut [f64]) -> std::result::Result<(), String> + Send + Sync;

/// An evaluable right-hand side `phi(t, x)`, scalar or vector valued.
#[derive(Clone)]
pub struct Rhs {
    dim: usize,
    f: Arc<RhsFn>,
}

impl std::fmt::Debug for Rhs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rhs").field("dim", &self.dim).finish()
    }
}

impl Rhs {
    /// Scalar right-hand side from an infallible closure.
    pub fn scalar(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim: 1,
            f: Arc::new(move |t, x, out| {
                out[0] = f(t, x[0]);
                Ok(())
            }),
        }
    }

    /// Scalar right-hand side that may reject points of its domain.
    pub fn scalar_fallible(
        f: impl Fn(f64, f64) -> std::result::Result<f64, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim: 1,
            f: Arc::new(move |t, x, out| {
                out[0] = f(t, x[0])?;
                Ok(())
            }),
        }
    }

    /// Vector right-hand side of dimension `dim`.
    pub fn system(
        dim: usize,
        f: impl Fn(f64, &[f64], &mut [f64]) -> std::result::Result<(), String>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// One initial value problem: orders, weighted initial datum, right-hand side,
/// declared singularity exponent, and horizon.
///
/// `lambda` declares the strength of the origin singularity of the composed
/// map `t -> phi(t, x(t))`: `t^lambda phi(t, x(t))` is assumed continuous and
/// bounded near `t = 0`. The transformed integrand then behaves like
/// `w^(-lambda/rho)`, so integrability requires `lambda < rho`. The classical
/// hypotheses additionally ask for `lambda < 1`; the radius formula enforces
/// that separately, while the solver itself only needs integrability.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    params: FhkParams,
    x0: Vec<f64>,
    rhs: Rhs,
    lambda: f64,
    horizon: f64,
}

impl CauchyProblem {
    pub fn new(
        params: FhkParams,
        x0: Vec<f64>,
        rhs: Rhs,
        lambda: f64,
        horizon: f64,
    ) -> Result<Self> {
        if x0.is_empty() || x0.len() != rhs.dim() {
            return Err(Error::IncompatibleInput(format!(
                "initial datum has dimension {} but rhs has dimension {}",
                x0.len(),
                rhs.dim()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterDomain(
                "initial datum must be finite".into(),
            ));
        }
        if !(lambda >= 0.0 && lambda < params.rho()) || !lambda.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "lambda must satisfy 0 <= lambda < rho = {} for an integrable singularity, got {lambda}",
                params.rho()
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            params,
            x0,
            rhs,
            lambda,
            horizon,
        })
    }

    /// Scalar convenience constructor.
    pub fn scalar(
        params: FhkParams,
        x0: f64,
        rhs: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lambda: f64,
        horizon: f64,
    ) -> Result<Self> {
        Self::new(params, vec![x0], Rhs::scalar(rhs), lambda, horizon)
    }

    pub fn params(&self) -> &FhkParams {
        &self.params
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Evaluates the right-hand side, rejecting non-finite outputs.
    pub fn eval_rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        (self.rhs.f)(t, x, &mut out).map_err(|reason| Error::RhsEvaluation {
            t,
            x: x.to_vec(),
            reason,
        })?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::RhsEvaluation {
                t,
                x: x.to_vec(),
                reason: "right-hand side produced a non-finite value".into(),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_known_values() {
        assert!((derive_gamma(0.5, 1.0 / 3.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((derive_gamma(0.5, 0.25).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(derive_gamma(0.37, 0.0).unwrap(), 0.37);
        assert_eq!(derive_gamma(0.37, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_rejects_out_of_range() {
        assert!(derive_gamma(0.0, 0.5).is_err());
        assert!(derive_gamma(1.0, 0.5).is_err());
        assert!(derive_gamma(0.5, -0.1).is_err());
        assert!(derive_gamma(0.5, 1.5).is_err());
        assert!(FhkParams::new(0.5, 0.5, 0.0).is_err());
        assert!(FhkParams::new(0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn grid_roundtrip_is_identity() {
        for &rho in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let g = SGrid::uniform(rho, 1.7, 64).unwrap();
            for i in 0..g.len() {
                let t = g.t_at(i);
                let s_back = s_of_t(rho, t);
                let rel = (s_back - g.s_at(i)).abs() / (1.0 + g.s_at(i).abs());
                assert!(rel <= 1e-14, "rho={rho} i={i} rel={rel}");
            }
        }
    }

    #[test]
    fn grid_rejects_bad_nodes() {
        assert!(SGrid::from_s_nodes(1.0, vec![]).is_err());
        assert!(SGrid::from_s_nodes(1.0, vec![0.1, 0.2]).is_err());
        assert!(SGrid::from_s_nodes(1.0, vec![0.0, 0.2, 0.2]).is_err());
        assert!(SGrid::from_s_nodes(0.0, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn graded_grid_keeps_endpoints() {
        let g = SGrid::graded(2.0, 1.0, 32, 3.0).unwrap();
        assert_eq!(g.s_at(0), 0.0);
        assert!((g.s_at(g.len() - 1) - 0.5).abs() < 1e-15);
        assert!((g.t_end() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        let p = FhkParams::new(0.5, 0.5, 1.0).unwrap();
        let g = SGrid::uniform(1.0, 1.0, 4).unwrap();
        let ones = WeightedTrajectory::from_scalar(p, g.clone(), vec![1.0; 5]).unwrap();
        assert_eq!(weighted_norm(&ones).unwrap(), 1.0);
        let zeros = WeightedTrajectory::from_scalar(p, g.clone(), vec![0.0; 5]).unwrap();
        assert_eq!(weighted_norm(&zeros).unwrap(), 0.0);
        let g3 = SGrid::uniform(1.0, 1.0, 2).unwrap();
        let mixed = WeightedTrajectory::from_scalar(p, g3, vec![0.5, -2.0, 1.5]).unwrap();
        assert_eq!(weighted_norm(&mixed).unwrap(), 2.0);
    }

    #[test]
    fn norm_of_zero_dimensional_trajectory_is_an_error() {
        let p = FhkParams::new(0.5, 0.5, 1.0).unwrap();
        let g = SGrid::uniform(1.0, 1.0, 2).unwrap();
        let empty = WeightedTrajectory::new(p, g, vec![vec![], vec![], vec![]]).unwrap();
        assert!(matches!(
            weighted_norm(&empty),
            Err(Error::EmptyDomain(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let p = FhkParams::new(0.5, 0.5, 1.0).unwrap();
        let g = SGrid::uniform(1.0, 1.0, 1).unwrap();
        let a = WeightedTrajectory::from_scalar(p, g.clone(), vec![1.0, 2.0]).unwrap();
        let b = WeightedTrajectory::from_scalar(p, g.clone(), vec![3.0, 1.0]).unwrap();
        assert_eq!(weighted_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(weighted_distance(&a, &b).unwrap(), 2.0);

        let ones = WeightedTrajectory::from_scalar(p, g.clone(), vec![1.0, 1.0]).unwrap();
        let zeros = WeightedTrajectory::from_scalar(p, g, vec![0.0, 0.0]).unwrap();
        assert_eq!(weighted_distance(&ones, &zeros).unwrap(), 1.0);
    }

    #[test]
    fn distance_rejects_mismatched_grids() {
        let p = FhkParams::new(0.5, 0.5, 1.0).unwrap();
        let a = WeightedTrajectory::from_scalar(p, SGrid::uniform(1.0, 1.0, 2).unwrap(), vec![0.0; 3])
            .unwrap();
        let b = WeightedTrajectory::from_scalar(p, SGrid::uniform(1.0, 2.0, 2).unwrap(), vec![0.0; 3])
            .unwrap();
        assert!(matches!(
            weighted_distance(&a, &b),
            Err(Error::IncompatibleTrajectories(_))
        ));
    }

    #[test]
    fn problem_validates_lambda_against_rho() {
        let p = FhkParams::new(0.3, 0.0, 2.0).unwrap();
        // lambda up to rho is the integrability limit; 1.4 is fine for rho = 2
        assert!(CauchyProblem::scalar(p, 1.0, |_, x| x, 1.4, 1.0).is_ok());
        assert!(CauchyProblem::scalar(p, 1.0, |_, x| x, 2.0, 1.0).is_err());
        let q = FhkParams::new(0.5, 0.0, 0.5).unwrap();
        assert!(CauchyProblem::scalar(q, 1.0, |_, x| x, 0.6, 1.0).is_err());
    }

    #[test]
    fn rhs_errors_carry_the_point() {
        let p = FhkParams::new(0.5, 1.0, 1.0).unwrap();
        let prob = CauchyProblem::new(
            p,
            vec![1.0],
            Rhs::scalar_fallible(|t, _| {
                if t > 0.5 {
                    Err("domain edge".into())
                } else {
                    Ok(0.0)
                }
            }),
            0.0,
            1.0,
        )
        .unwrap();
        match prob.eval_rhs(0.75, &[2.0]) {
            Err(Error::RhsEvaluation { t, x, .. }) => {
                assert_eq!(t, 0.75);
                assert_eq!(x, vec![2.0]);
            }
            other => panic!("expected rhs evaluation error, got {other:?}"),
        }
        // non-finite outputs are rejected, never silently propagated
        let bad = CauchyProblem::scalar(p, 1.0, |_, _| f64::INFINITY, 0.0, 1.0).unwrap();
        assert!(bad.eval_rhs(0.5, &[0.0]).is_err());
    }
}
