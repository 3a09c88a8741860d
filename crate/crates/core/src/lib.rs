//! Kernel-aggregated change-point detection for sequences of network snapshots.
//!
//! Two kernel matrices computed from the sequence are combined through a
//! Mahalanobis-type statistic whose permutation-null moments are known in
//! closed form. Inference is available either by permutation
//! ([`inference::permutation_test`]) or through analytic tail approximations
//! ([`inference::fast_test`]).

// `!(x > y)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod graphs;
pub mod inference;
pub mod kernels;
pub mod moments;
pub mod numeric;
pub mod par;
pub mod rng;
pub mod scan;
pub mod segmentation;

pub use error::{DegeneracyKind, Error, Result};
