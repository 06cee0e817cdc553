//! Feature spaces, causal functions and the grammar that generates them.

mod function;
mod grammar;
mod parse;
mod space;

pub use function::{CausalAssertion, CausalFunction, Domain, Reference, Role};
pub use grammar::{enumerate_functions, prior_probability, sample_function, HypothesisSpace};
pub use space::{FeatureDef, FeatureSpace, GrammarConfig, Object, ObjectDisplay, Observation, SpaceDocument};
