//! Multiscale confidence bands and an adaptive estimator for the score
//! function of a univariate log-concave density.

pub mod band;
pub mod concentration;
pub mod error;
pub mod extreal;
pub mod io;
pub mod kernels;
pub mod loss;
pub mod numeric;
pub mod quadrature;
pub mod sim;
pub mod smoothed;
pub mod zoo;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use kernels::Sample;
pub use zoo::{DensityModel, Family};
