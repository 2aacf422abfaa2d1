//! Multilevel concentration bounds with explicit constants, the tensor and
//! difference-operator norms they consume, exact samplers for the
//! underlying measures, and empirical/exhaustive verifiers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod calculus;
pub mod discrete;
pub mod error;
pub mod samplers;
pub mod tensor;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
