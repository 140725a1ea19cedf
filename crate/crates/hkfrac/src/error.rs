//! Error types shared by the library.

/// Errors produced by the numerical core.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    /// An operation was asked for on an empty set of values.
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    /// Two trajectories do not share grid, orders, or dimension.
    #[error("incompatible trajectories: {0}")]
    IncompatibleTrajectories(String),

    /// Input lengths do not match the grid they are supposed to live on.
    #[error("incompatible input: {0}")]
    IncompatibleInput(String),

    /// The grid is too small for the requested stencil or scheme.
    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    /// The user right-hand side failed to evaluate at a point.
    #[error("rhs evaluation failed at t={t}, x={x:?}: {reason}")]
    RhsEvaluation { t: f64, x: Vec<f64>, reason: String },

    /// A series evaluation was requested outside its validated regime.
    #[error("out of series regime: {0}")]
    OutOfRegime(String),

    /// An envelope function of a global certificate failed to evaluate.
    #[error("certificate input: {0}")]
    CertificateInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
