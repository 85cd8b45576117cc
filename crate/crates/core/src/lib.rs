//! Mediated probabilities of causation.
//!
//! Given a binary exposure `A`, a binary mediator `M`, a binary adverse
//! outcome `Y`, and covariates `X`, this crate computes the probability that
//! an observed adverse outcome was induced through the mediating pathway
//! (`A -> M -> Y`) versus the direct pathway (`A -> Y`), among units that
//! would experience the adverse mediator and outcome under exposure.
//!
//! The crate is organised around the estimation pipeline:
//!
//! * [`estimand`] — closed-form identification: maps conditional-probability
//!   nuisance values at a covariate point to every causal estimand.
//! * [`world`] — a synthetic data-generating process over full counterfactual
//!   tables, plus an exact 64-state enumeration oracle that computes the same
//!   estimands directly from their counterfactual definitions.
//! * [`nuisance`] — nuisance models: exact curves, rate-controlled noise
//!   injection, and cross-fitted logistic fits.
//! * [`eif`] — efficient-influence-function pseudo-outcomes for the indirect,
//!   total, and direct probabilities of causation.
//! * [`projection`] — weighted least-squares projection of the pseudo-outcomes
//!   onto a working model, with sandwich covariance and pointwise intervals.
//! * [`montecarlo`] — replicated simulation studies (bias / RMSE / coverage)
//!   and curve sweeps for plotting.
//!
//! All randomness is derived from explicit 64-bit seeds and per-unit streams,
//! so every result is reproducible across runs and thread counts.

pub mod basis;
pub mod eif;
pub mod error;
pub mod estimand;
pub mod math;
pub mod montecarlo;
pub mod nuisance;
pub mod projection;
pub mod world;

pub use basis::Basis;
pub use eif::Target;
pub use error::{Error, Result};
pub use estimand::{EstimandValues, NuisanceAt};
pub use world::{DgpSpec, ObservedRecord, PotentialWorld};
