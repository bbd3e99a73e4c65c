use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid bath recipe: {0}")]
    InvalidRecipe(String),

    #[error("positivity bound violated: sum eps^2/omega^2 = {coupling_sum} > omega0^2 = {bound}")]
    PositivityViolation { coupling_sum: f64, bound: f64 },

    #[error("eigensolver failed: {0}")]
    NumericalFailure(String),

    #[error("normal mode {index} has non-positive eigenvalue {value}")]
    NonPositiveMode { index: usize, value: f64 },

    #[error("integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("energy function is negative at omega = {omega}, x = {x}: {value}")]
    NegativeEnergy { omega: f64, x: f64, value: f64 },

    #[error("initial state violates the uncertainty principle (residual {residual})")]
    UnphysicalInitialState { residual: f64 },

    #[error("R^2(t) = {r2} is not positive at t = {t}")]
    NonPositiveR2 { t: f64, r2: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
