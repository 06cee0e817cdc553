//! Normative inference: a single universal law (UnCaLa) and latent causal
//! categories sampled by collapsed Gibbs (LoCaLa).

mod gibbs;
mod predictive;
mod uncala;

pub use gibbs::{gibbs_sample, write_samples_csv, GibbsConfig, PosteriorSample};
pub use predictive::{choose, posterior_predictive, prior_predictive, Predictive};
pub use uncala::{uncala_posterior, uncala_predictive};
