//! Online primal-dual tracking of time-varying convex programs whose outputs
//! come from a linear plant and are measured with bounded error.
//!
//! The iteration lives in [`engine`], reference trajectories in [`oracle`],
//! empirical metrics in [`metrics`] and the theoretical bounds in [`bounds`].
//! [`scenarios`] holds the built-in problems and [`cli`] the `tvopt` binary.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::len_without_is_empty
)]

pub mod bounds;
pub mod check;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod projections;
pub mod report;
pub mod scenarios;
pub mod schedule;
pub mod util;

pub use error::{Error, Result};
