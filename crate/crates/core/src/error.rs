use thiserror::Error;

pub type Result<T, E = DesignError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("configuration error: {0}")]
    Config(String),

    /// The information matrix has no inverse. `direction` is the unit
    /// eigenvector of its smallest eigenvalue, in basis coordinates.
    #[error("singular design: information matrix is rank deficient along direction {direction:?}")]
    SingularDesign { direction: Vec<f64> },

    #[error("degenerate variance at t = {t}: sigma_u(t) = 0 while mu(t) != y0")]
    DegenerateVariance { t: f64 },

    #[error("indeterminate margin at t = {t}: sigma_u(t) = 0 and mu(t) = y0")]
    IndeterminateMargin { t: f64 },

    #[error("no positive median failure time (delta1 = {delta1}, delta2 = {delta2}, y0 = {y0}); the aggregate path must start below y0 and increase")]
    NoPositiveMedian { delta1: f64, delta2: f64, y0: f64 },

    #[error("h(t) is not increasing on [{lo}, {hi}]; quantile would not be unique")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("outside the closed-form regime: {0}")]
    OutOfRegime(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
