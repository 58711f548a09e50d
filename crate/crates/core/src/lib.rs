//! Planning training-set group allocations.
//!
//! The crate models how the composition of a training set (its allocation
//! over groups) drives per-group and population risk, fits per-group
//! power-law scaling curves to observed losses, computes optimal allocations
//! and estimator weights, and turns pilot samples into collection plans.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod error;
pub mod estimator;
pub mod fit;
pub mod harness;
mod lm;
pub mod optimal;
pub mod par;
pub mod presets;
pub mod rng;
pub mod synthetic;

pub use allocation::{
    allocation_from_counts, counts_from_allocation, sample_from_allocation, Allocation, GroupCounts, GroupId,
    GroupedSample, PopulationSpec, Record,
};
pub use error::{Error, Result};
pub use optimal::{GroupScaling, ScalingModel};
