//! Bilinear single-input single-output systems
//!
//! ```text
//! type I : x' = (A + u N) x + b u,  x(0) = 0,  y = c x
//! type II: x' = (A + u N) x,        x(0) = b,  y = c x
//! ```
//!
//! The crate covers exact simulation under piecewise-constant inputs,
//! input/output equivalence and canonicality tests on the 4-tuple
//! `(A, N, b, c)`, constructive generation of pairs that cannot be told apart
//! by restricted input classes (steps, a single pulse, pulses followed by a
//! constant, fixed-rate sampled pulses), and identification of a system from
//! its responses to pulses of fixed amplitude and varying width.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterex;
pub mod error;
pub mod identify;
pub mod input;
pub mod json;
pub mod matfun;
pub mod realization;
pub mod reproduce;
pub mod rng;
pub mod simulate;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use input::PiecewiseConstantInput;
pub use matfun::Tolerances;
pub use realization::Word;
pub use system::{FourTuple, SimilarityWitness, SystemKind};
pub use trajectory::Trajectory;
