//! Numerical tools for predator-prey systems in a habitat that shifts at a
//! constant climate speed: critical spreading speeds, forced traveling
//! waves built from upper and lower solutions, and Cauchy simulations with
//! moving-frame probes.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod model;
pub mod ops;
pub mod output;
pub mod pipeline;
pub mod sim;
pub mod wave;

pub use error::{Error, Result};
