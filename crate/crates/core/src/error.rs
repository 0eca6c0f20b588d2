use thiserror::Error;

/// Errors raised by the model, the numerical kernels and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constraint matrix has row rank {rank}, expected {rows}")]
    RankDeficient { rank: usize, rows: usize },

    #[error("cost c[{index}] = {value} is not strictly positive")]
    NonPositiveCost { index: usize, value: i64 },

    #[error("exact subdeterminant enumeration refused: n = {n} exceeds cap {cap}")]
    ExactTooLarge { n: usize, cap: usize },

    #[error(
        "matrix is not positive definite (pivot {index} = {pivot:e}, threshold {threshold:e})"
    )]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("state x[{index}] = {value:e} is not strictly positive")]
    NonPositiveState { index: usize, value: f64 },

    #[error("direction is not in ker A (residual {residual:e})")]
    NotInKernel { residual: f64 },

    #[error("eps = {0} must lie in (0, 1/2)")]
    BadEps(f64),

    #[error("step length h = {h} is outside (0, {limit}]")]
    BadStep { h: f64, limit: f64 },

    #[error("positivity lost at iteration {iteration}: x[{index}] = {value:e}")]
    PositivityLost {
        iteration: u64,
        index: usize,
        value: f64,
    },

    #[error("no strictly positive feasible start: {0}")]
    NoFeasibleInteriorStart(String),

    #[error("no strictly positive feasible point exists (coordinate {index} vanishes on the whole feasible set)")]
    NoInteriorPoint { index: usize },

    #[error("feasible region is empty")]
    Infeasible,

    #[error("trace lacks verification columns (B, phi)")]
    MissingVerifyData,

    #[error("integrator step size underflow at t = {t} (dt = {dt:e})")]
    StepSizeUnderflow { t: f64, dt: f64 },

    #[error("trace is insufficient for a rate fit: {0}")]
    InsufficientTrace(String),

    #[error("exponent {0} overflows the dual objective")]
    Overflow(f64),

    #[error(
        "Newton ascent stalled at mu = {mu} after {iterations} iterations (gradient {gradient:e})"
    )]
    NewtonStalled {
        mu: f64,
        iterations: usize,
        gradient: f64,
    },

    #[error("enumeration refused: n = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
