//! Simulation toolkit for the MIRAGE randomized last-level cache.
//!
//! * [`ciphers`]: PRESENT-80, PRINCE-64 and AES-128 backends behind a
//!   name-keyed registry, plus keyed set-index derivation.
//! * [`bnb`]: the buckets-and-balls model of the tag store.
//! * [`cache`]: the full tag-store / data-store simulator with global
//!   evictions.
//! * [`analysis`]: summary statistics and the experiment runners.
//!
//! Defective behaviours from earlier simulators are available only through
//! explicit [`BugCompat`] flags.

pub mod analysis;
pub mod bnb;
pub mod bugcompat;
pub mod cache;
pub mod ciphers;
pub mod error;
pub mod rng;

pub use bugcompat::{BugCompat, BugCompatFlag};
pub use error::{Error, ErrorClass, Result};
