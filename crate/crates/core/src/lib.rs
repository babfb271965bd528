//! Optimal designs for accelerated degradation tests under a linear
//! mixed-effects degradation model with a soft-failure threshold.
//!
//! The crate covers the failure-time distribution under normal use, the
//! c-criterion for estimating the median failure time, capped c-optimal time
//! plans for repeated measures, Elfving-type designs for destructive testing
//! and parameter sensitivity sweeps.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criteria;
pub mod csvio;
pub mod design;
pub mod destructive;
pub mod error;
pub mod failure;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod scenario;
pub mod sweeps;

pub use design::ApproximateDesign;
pub use error::{DesignError, Result};
pub use model::{Basis, DegradationModel, ErrorSpec, StraightLineParams, TimeMarginal};
