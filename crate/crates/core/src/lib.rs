//! Bayesian estimation of two-class latent-class ordinal probit models.
pub mod comparison;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod optim;
pub mod samplers;
pub mod sim;
pub mod truncnorm;

pub use error::{Error, Result};
