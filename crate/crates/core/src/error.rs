use crate::dynamics::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An oracle returned a non-finite value or failed outright.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An inner solver ran out of iterations. `best` is the best iterate seen.
    #[error("{context} did not converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure {
        context: String,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// A coupled run hit its iteration budget or diverged.
    #[error(
        "coupled run did not converge after {} iterations (final residual {:.3e})",
        .0.iterations_used,
        .0.final_residual()
    )]
    NotConverged(Box<TrajectoryRecord>),

    /// Two routes to the same quantity disagree; the instance violates a modelling assumption.
    #[error("inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}
