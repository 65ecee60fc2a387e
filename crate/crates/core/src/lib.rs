// Guards written as `!(x > 0.0)` also reject NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod closed_loop;
pub mod error;
pub mod fem;
pub mod open_loop;
pub mod problem;
pub mod regression;
pub mod riccati;
pub mod stochastics;

pub use error::{Error, Result};
