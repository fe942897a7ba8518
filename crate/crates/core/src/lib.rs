//! Perceived-competence modeling for a robot guiding a human follower.
//!
//! The pipeline turns nine-step observation windows into trajectory
//! features ([`features`]), discretizes them with k-means and quantile
//! binning ([`discretization`]), fits a discrete causal Bayesian network
//! ([`cbn`]) and searches the behavior lattice for the smallest change that
//! the network expects to be rated as competent ([`counterfactual`]).
//! [`evaluation`] runs participant-held-out cross-validation and
//! [`synthdata`] produces datasets with a known labeling rule.

pub mod cbn;
pub mod counterfactual;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod features;
pub mod pipeline;
pub mod discretization;
pub mod rng;
pub mod synthdata;
pub mod variables;

pub use error::{Error, Result};
