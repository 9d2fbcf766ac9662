//! Exact dynamic mode decomposition of field snapshot series, together with
//! a damped-membrane simulator and the closed-form square-membrane modes used
//! to check what the decomposition finds.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dmd;
pub mod error;
pub mod linalg;
pub mod membrane;
pub mod oracle;
pub mod report;
pub mod snapshot;

pub use error::{Error, Result};
pub use faer::c64;
