#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod fespace;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;

pub use error::{Error, Result};
