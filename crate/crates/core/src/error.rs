use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular point: density has a pole at lambda = {lambda}")]
    SingularPoint { lambda: f64 },

    #[error("accuracy failure: achieved error {achieved:.3e}, requested {requested:.3e}")]
    AccuracyFailure { achieved: f64, requested: f64 },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("unclassifiable density: {0}")]
    Unclassifiable(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("method mismatch: {0}")]
    MethodMismatch(String),

    #[error("non-PD generator matrix: {0}")]
    NonPositiveDefinite(String),

    #[error("theorem inapplicable: {0}")]
    TheoremInapplicable(String),

    #[error("expansion inapplicable: {0}")]
    ExpansionInapplicable(String),

    #[error("discretization failure: last two iterates {previous} and {last}")]
    DiscretizationFailure { previous: f64, last: f64 },

    #[error("Rosenblatt regime: {0}")]
    RosenblattRegime(String),

    #[error("precondition violation: {0}")]
    PreconditionViolation(String),

    #[error("degenerate experiment: {0}")]
    DegenerateExperiment(String),

    #[error("eigen-decomposition failure: {0}")]
    EigenFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::AccuracyFailure { .. }
                | Error::DiscretizationFailure { .. }
                | Error::EigenFailure(_)
                | Error::NonPositiveDefinite(_)
                | Error::DivergentIntegral(_)
                | Error::RosenblattRegime(_)
                | Error::SingularPoint { .. }
                | Error::DegenerateExperiment(_)
        )
    }
}
