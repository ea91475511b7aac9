use thiserror::Error;

/// Errors raised by the solvers and diagnostics of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("negative Sobolev index s = {0}")]
    NegativeSobolevIndex(f64),

    #[error("initial matrix Q0 is not symmetric (asymmetry {asymmetry:.3e})")]
    NonsymmetricQ0 { asymmetry: f64 },

    #[error("potential matrix M(t) is not symmetric at t = {t} (asymmetry {asymmetry:.3e})")]
    NonsymmetricPotential { t: f64, asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time step and horizon must be positive (dt = {dt}, t_max = {t_max})")]
    NonpositiveStep { dt: f64, t_max: f64 },

    #[error("t = {t} lies beyond the valid horizon [0, {horizon}]")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("non-finite field value at t = {time}")]
    NonfiniteField { time: f64 },

    #[error(
        "elliptic region at t = {time}: min f'(|a|^2) = {margin:.4e} is below the \
         hyperbolicity threshold {threshold:.4e}"
    )]
    EllipticRegion { time: f64, margin: f64, threshold: f64 },

    #[error("solution left the smooth window at t = {time}: {quantity} = {value:.4e} exceeds {limit:.4e}")]
    SmoothnessLost {
        time: f64,
        quantity: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("time t = {t} is not among the sampled times")]
    TimeNotSampled { t: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
