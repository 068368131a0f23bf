use std::io;

use thiserror::Error;

use crate::ciphers::BlockCipherKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Usage,
    Assertion,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{kind} expects a {expected}-byte key, got {actual} bytes")]
    KeyLength {
        kind: BlockCipherKind,
        expected: usize,
        actual: usize,
    },

    #[error("unknown cipher `{0}`")]
    UnknownCipher(String),

    #[error("{0} is only available with the matching --bug-compat flag")]
    BugCompatRequired(&'static str),

    #[error("skew {0} out of range (expected 0 or 1)")]
    InvalidSkew(usize),

    #[error("global eviction requested on an empty data store")]
    EmptyDataStore,

    #[error("cannot make {requested} lines resident in a data store of {capacity} lines")]
    InitTooLarge { requested: u64, capacity: u64 },

    #[error("initialization requires a freshly constructed cache")]
    CacheNotFresh,

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    /// The data store ran out of free lines with global evictions disabled.
    #[error(
        "capacity assertion failed: {installed} lines installed into a data store of {capacity} lines \
         (reference {reference})"
    )]
    CapacityAssertion {
        installed: u64,
        capacity: u64,
        reference: u64,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed known-answer fixture at line {line}: {reason}")]
    Fixture { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_)
            | Error::KeyLength { .. }
            | Error::UnknownCipher(_)
            | Error::BugCompatRequired(_)
            | Error::InvalidProbability(_)
            | Error::Fixture { .. } => ErrorClass::Config,
            Error::InvalidSkew(_)
            | Error::EmptyDataStore
            | Error::InitTooLarge { .. }
            | Error::CacheNotFresh => ErrorClass::Usage,
            Error::CapacityAssertion { .. } | Error::Invariant(_) => ErrorClass::Assertion,
            Error::Io(_) | Error::Json(_) => ErrorClass::Io,
        }
    }
}
