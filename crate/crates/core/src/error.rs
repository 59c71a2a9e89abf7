use alloc::string::String;

use crate::phase_space::Ordering;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("transmission matrix amplifies: decoherence eigenvalue {eigenvalue:e} is below -{tolerance:e}")]
    Amplifying { eigenvalue: f64, tolerance: f64 },

    #[error("{operation} requires the {expected} representation, ensemble is {found}")]
    Representation {
        operation: &'static str,
        expected: &'static str,
        found: Ordering,
    },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("grouped tensor needs {entries} entries, cap is {cap}")]
    TensorTooLarge { entries: usize, cap: usize },

    #[error("{what} index {index} out of range 0..{len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("line {line}: {reason}")]
    MalformedPattern { line: usize, reason: String },

    #[error("unphysical Gaussian moments: {0}")]
    Unphysical(String),

    #[error("at least 2 sub-ensembles are needed for an error estimate, got {0}")]
    TooFewSubensembles(usize),

    #[error("no bins survive the cutoffs")]
    NoRetainedBins,

    #[error("bin {bin} has zero combined variance but a nonzero difference {difference:e}")]
    ZeroVariance { bin: usize, difference: f64 },

    #[error("{what} limited to {limit}, got {requested}")]
    OracleLimit {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    #[error("photon cutoff {cutoff} leaves a norm deficit of {deficit:e}")]
    InsufficientCutoff { cutoff: usize, deficit: f64 },

    #[error("ordering corrections are only available up to second order, requested order {0}")]
    OrderTooHigh(u32),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
