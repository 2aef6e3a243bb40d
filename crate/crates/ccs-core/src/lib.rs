//! Matrix completion from cross-concentrated samples.
//!
//! The crate provides the sampling model (uniform observations
//! concentrated on selected row and column submatrices), an iterative
//! CUR completion solver and a two-step completion route for it, an SVP
//! baseline for uniform observations, sample-complexity calculators,
//! evaluation metrics, file formats, and seeded experiment drivers.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod icurc;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod sampling;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
