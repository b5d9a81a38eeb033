use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("tissue fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("mask contains no tissue cells")]
    EmptyMask,
    #[error("patch set is empty")]
    EmptyPatchSet,
    #[error("coloring does not cover patch {0}")]
    IncompleteColoring(u64),
    #[error("cannot split {patches} patches into {k} fragments")]
    KTooLarge { k: usize, patches: usize },
    #[error("column {0} has zero variance")]
    DegenerateVariance(usize),
    #[error("fragment has {0} rows, at least 2 are required")]
    TooFewRows(usize),
    #[error("eigen solver did not converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("input is empty")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("instance `{0}` has zero bandwidth")]
    ZeroBandwidth(String),
    #[error("throughput must be positive, got {0}")]
    InvalidThroughput(f64),
    #[error("image `{image}` has {fragments} fragments but only {instances} instances are available")]
    PoolTooSmall {
        image: String,
        fragments: usize,
        instances: usize,
    },
    #[error("no allocation satisfies the node, budget and time constraints")]
    Infeasible,
    #[error("search space of {0} mappings exceeds the brute-force limit")]
    SearchSpaceTooLarge(u128),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
