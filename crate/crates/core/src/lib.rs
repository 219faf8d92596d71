#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod factor;
pub mod solver;
pub mod transfer;
pub mod simlab;
pub mod inference;
pub mod cli;
