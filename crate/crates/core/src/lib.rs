//! Analytic and Monte Carlo machinery for cyclic polling systems fed by
//! multidimensional Lévy input.
//!
//! The workload vector at successive polling instants of a fixed queue is a
//! multi-type branching process with immigration on the orthant. This
//! crate evaluates its branching mechanism, immigration transform, mean and
//! rate matrices, the stability verdict, the embedded-epoch workload
//! transforms and the arbitrary-epoch workload transform. Every analytic
//! quantity has a simulated counterpart in [`sim`].
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration files and
//! the command line live in the companion `levypoll` crate.

#![cfg_attr(not(test), no_std)]
// NaN must fail range checks, so negated comparisons are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod discipline;
mod error;
pub mod levy;
pub mod linalg;
pub mod model;
pub mod mtjbp;
pub mod sim;
pub mod stats;

pub use discipline::Discipline;
pub use error::{Error, Result};
pub use levy::{
    JumpBase, JumpSpec, ServedProcessSpec, SubordinatorSpec, SwitchDuration, SwitchSpec,
};
pub use linalg::Matrix;
pub use model::{PollingModel, QueueSpec, Tolerances};
pub use mtjbp::{Analysis, StabilityReport, StationaryMeans, TransformValue, Verdict};
pub use sim::SimConfig;
pub use stats::SimEstimate;
