use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the core library.
///
/// Variants are grouped so that callers can map them onto exit codes:
/// configuration problems, data validation problems and numerical aborts.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("duplicate qid `{qid}` on lines {first} and {second}")]
    DuplicateQid {
        qid: String,
        first: usize,
        second: usize,
    },

    #[error("instance `{qid}`: {message}")]
    Invariant { qid: String, message: String },

    #[error("slicing function `{slice}` cannot be applied to `{qid}`: {message}")]
    SlicePrecondition {
        slice: String,
        qid: String,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("alignment mismatch: {0}")]
    Alignment(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: usize, what: String },
}

impl Error {
    /// True for errors caused by bad data rather than bad configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Record { .. }
                | Error::DuplicateQid { .. }
                | Error::Invariant { .. }
                | Error::SlicePrecondition { .. }
                | Error::Alignment(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
