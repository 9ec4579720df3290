//! Toy-scale reference implementations of the state-update recurrences.
//!
//! Everything runs in `f64` with an [`OpCounter`] threaded through, so the
//! analytic counts in `opgraph` can be pinned to executed arithmetic and the
//! parallel formulations checked against the step-by-step recurrence.
//!
//! The rank-R chunked form in [`ssd`] generalizes the rank-1 chunking; no
//! published kernel exists for it, so it is an extrapolation.

pub mod check;
pub mod corpus;
mod counter;
pub mod scan;
pub mod selective;
pub mod ssd;

use thiserror::Error;

pub use counter::OpCounter;
pub use scan::{blelloch_pscan, sequential_scan, ScanInput};
pub use selective::{selective_scan, ScanMethod, SelectiveInput};
pub use ssd::{chunked_ssd, discretize, mimo_scan, mimo_sequential, HeadShape, MimoInput, MimoMethod, SsdInput};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("input shape error: {0}")]
    Shape(String),
}
