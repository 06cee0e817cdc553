//! Symbolic causal laws, latent causal categories and the models that
//! generalize from them.

pub mod categories;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod infer;
pub mod models;
pub mod process;
pub mod rng;

pub use error::{Error, Result};
