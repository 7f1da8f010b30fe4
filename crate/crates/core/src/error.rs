use thiserror::Error;

/// Errors raised by the estimators, generators and backtesting pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    #[error("series has {n} observations, at least {min} are required")]
    SeriesTooShort { n: usize, min: usize },

    #[error("k = {k} is out of range for n = {n} (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },

    #[error("series contains a non-finite value at index {0}")]
    NonFiniteInput(usize),

    #[error("threshold X(n-k,n) = {0} is not positive; log-spacings are undefined")]
    NonPositiveThreshold(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel argument t = {0} lies outside (0, 1]")]
    OutsideUnitInterval(f64),

    #[error("second-order parameter must be negative, got {0}")]
    NonNegativeRho(f64),

    #[error("tail probability p = {p} must satisfy 0 < p < k/n = {limit}")]
    TailProbability { p: f64, limit: f64 },

    #[error("tail index estimate {0} is not positive and cannot be extrapolated")]
    NonPositiveGamma(f64),

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    Quadrature(f64),

    #[error("only {0} positive observations; the k_rho rule needs at least 3")]
    TooFewPositive(usize),

    #[error("invalid model specification: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("requested {requested} exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("wall-clock budget exhausted after {completed} replications")]
    TimeBudgetExceeded { completed: usize },
}

pub type Result<T> = std::result::Result<T, TailError>;
