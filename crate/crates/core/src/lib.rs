//! Physics-informed Kolmogorov-Arnold networks with dynamically bounded
//! adaptive loss weighting.

pub mod approximator;
pub mod autodiff;
pub mod bspline;
pub mod dbaw;
pub mod error;
pub mod experiment;
pub mod pde;
pub mod trainer;

pub use error::{Error, Result};
