use crate::algorithms::trace::IterationRecord;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate subproblem: {0}")]
    Degenerate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("{what} did not converge within {iters} iterations")]
    Convergence {
        what: &'static str,
        iters: usize,
        /// Values tracked by the failing loop (e.g. the Dinkelbach parameter history).
        history: Vec<f64>,
    },
    #[error("outer iteration {t}: {source}")]
    AtIteration {
        t: usize,
        trace: Vec<IterationRecord>,
        #[source]
        source: Box<Error>,
    },
    #[error("outer loop hit the cap of {iters} iterations")]
    OuterCap { iters: usize, trace: Vec<IterationRecord> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn convergence(what: &'static str, iters: usize) -> Self {
        Error::Convergence { what, iters, history: Vec::new() }
    }

    /// Trace collected before the failure, when the error came from an outer loop.
    pub fn trace(&self) -> Option<&[IterationRecord]> {
        match self {
            Error::AtIteration { trace, .. } | Error::OuterCap { trace, .. } => Some(trace),
            _ => None,
        }
    }
}
