//! Differentially private release of graph Laplacians and covariance
//! matrices by Gaussian random projection, with baseline mechanisms and a
//! numerical audit engine for the privacy and spectral bounds.

pub mod audit;
pub mod baselines;
pub mod bench;
pub mod covariance;
pub mod error;
pub mod graph;
pub mod laplacian;
pub mod linalg;
pub mod meta;
pub mod sketch;

pub use error::{Error, Result};
