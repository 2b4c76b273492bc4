//! Growth- and decay-curve modeling for hierarchical longitudinal data.
//!
//! The crate fits parametric, semiparametric, and functional mixed-effects
//! (FME) growth curves by casting each model as a linear-Gaussian
//! state-space model, evaluating the marginal likelihood with an
//! exact-diffuse Kalman filter, and estimating free parameters by
//! derivative-free maximum likelihood. Model choice across curve families
//! uses BIC. Post-fit analysis covers smoothed mean curves with pointwise
//! confidence bands, replicate deviation curves, differenced growth rates,
//! and between-group curve differences.
//!
//! Modules:
//! - [`ssm`]: the general state-space model, longitudinal containers,
//!   validation, and simulation.
//! - [`kalman`]: exact-diffuse filter/smoother and component extraction.
//! - [`models`]: curve families and the model builders.
//! - [`estimate`]: maximum-likelihood fitting, BIC, model selection.
//! - [`analysis`]: growth rates, bands, curve differences, deviations.
//! - [`io`]: CSV ingestion, grid augmentation, fit artifacts, SVG plots.

pub mod analysis;
pub mod error;
pub mod estimate;
pub mod io;
pub mod kalman;
mod linalg;
pub mod models;
pub mod ssm;

pub use error::{Error, Result};
