//! Regression with regressors recovered from random dot product graphs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod error;
pub mod geodesic;
pub mod linalg;
pub mod rdpg;
pub mod regression;
pub mod sim;
pub mod spectral;
pub mod stats;
pub mod stress;

pub use error::{Error, Result};
