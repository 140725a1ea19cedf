//! Numerical machinery for Cauchy problems driven by the Hilfer-Katugampola
//! fractional derivative: operator evaluation, a singular Volterra solver with
//! explicit local-existence radii, step-wise continuation with blow-up
//! classification, generalized Gronwall bounds, and closed-form references for
//! cross-validation.

pub mod analytic;
pub mod continuation;
pub mod error;
pub mod expr;
pub mod operators;
pub mod quadrature;
pub mod space;
pub mod volterra;

pub mod cli;

pub use error::{Error, Result};
pub use quadrature::KernelWeights;
pub use space::{
    derive_gamma, s_of_t, t_of_s, weighted_distance, weighted_norm, CauchyProblem, FhkParams,
    Rhs, SGrid, WeightedTrajectory,
};
pub use volterra::{picard_solve, SolveOptions, SolveReport};
pub use continuation::{continue_solution, Classification, ContinuationOptions, ContinuationReport, Target};
