use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("singular sweep at node {node}: pivot {pivot:e}")]
    SingularSweep { node: usize, pivot: f64 },

    #[error("unstable closure on the {axis} axis: denominator {denominator:e}")]
    UnstableClosure { axis: &'static str, denominator: f64 },

    #[error("non-finite temperature at step {step}")]
    NonFinite { step: usize },

    #[error("invalid tape: {0}")]
    InvalidTape(String),

    #[error("degenerate polynomial fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate record: {0}")]
    DegenerateRecord(String),

    #[error("generation failed: {skipped} of {total} records could not be simulated")]
    Generation { skipped: usize, total: usize },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSweep { .. }
                | Error::UnstableClosure { .. }
                | Error::NonFinite { .. }
                | Error::DegenerateFit(_)
                | Error::Generation { .. }
        )
    }
}
