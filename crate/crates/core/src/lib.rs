//! Dyadic intervals, rearrangements of the Haar system, and executable
//! estimates for vector-valued rearrangement operators.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl, clippy::needless_range_loop)]

pub mod dyadic;
pub mod error;
pub mod exact;
pub mod extrapolation;
pub mod operators;
pub mod optimize;
pub mod rearrangement;
pub mod sampling;
pub mod scalar;
pub mod space;

pub use dyadic::{DyadicInterval, IntervalCollection};
pub use error::{Error, Result};
pub use exact::{Dyadic, ExactRatio};
pub use rearrangement::RearrangementMap;
pub use scalar::Scalar;
pub use space::{Atom, HaarExpansion, SpaceSpec, StepFunction, StoppingTimeGrid};

pub type HaarExpansionF64 = HaarExpansion<f64>;
pub type HaarExpansionF32 = HaarExpansion<f32>;
pub type StepFunctionF64 = StepFunction<f64>;
pub type StepFunctionF32 = StepFunction<f32>;
pub type AtomF64 = Atom<f64>;
