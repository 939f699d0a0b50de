//! Zero-adjusted cure-rate (ZACR) survival models.
//!
//! Population survival functions with a probability atom at time zero and a
//! cure plateau, built from a latent competing-cause count and a proper
//! baseline lifetime law. The crate provides closed-form evaluation,
//! censored maximum likelihood with Wald intervals and AIC, data simulation,
//! a Monte Carlo study harness and Kaplan–Meier utilities.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baseline;
pub mod causes;
pub mod data;
pub mod error;
pub mod inference;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod simulate;

pub use baseline::{Baseline, FittableBaseline, LogNormal};
pub use causes::CauseCount;
pub use data::{Observation, Status, SurvivalDataset};
pub use error::{Result, ZacrError};
pub use inference::{
    fit_mle, log_likelihood, observed_information, wald_intervals, FitConfig, FitResult,
};
pub use model::{PopulationDensity, PopulationSurvivalDecomposition, ZacrModel, ZacrVariant};
