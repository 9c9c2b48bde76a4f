//! Baumslag–Solitar actions on the line and the circle-dynamics toolkit
//! around them.

// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod interval;
pub mod piecewise;
pub mod rational;
pub mod words;
pub mod action;
pub mod circle;
pub mod rigidity;
pub mod presentations;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
