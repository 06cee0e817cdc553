use crate::dsl::{HypothesisSpace, Object, Observation};
use crate::error::Result;

use super::Predictive;

/// `P(f | d) ∝ P_G(f) Π_i P(d_i | f)` over the enumerated hypotheses, in the
/// hypothesis space's order.
pub fn uncala_posterior(data: &[Observation], hyp: &HypothesisSpace) -> Result<Vec<f64>> {
    hyp.posterior(data)
}

/// One law, applied to every query: the posterior mixture of outcome domains.
pub fn uncala_predictive(posterior: &[f64], hyp: &HypothesisSpace, a: &Object, r: &Object, candidates: Option<&[Object]>) -> Predictive {
    Predictive::from_dense(hyp.space(), a, r, &hyp.mixture_predictive(posterior, a, r), candidates)
}
