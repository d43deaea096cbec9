// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budgets;
pub mod cli;
pub mod config;
pub mod error;
pub mod fields;
pub mod filtering;
pub mod geometry;
pub mod quadrature;
pub mod sections;
pub mod sweeps;

pub use error::{Error, Result};
