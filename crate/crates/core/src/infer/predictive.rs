use std::io::Write;

use rand::Rng;
use serde_json::json;

use crate::categories::{CategoryState, Hyperparams};
use crate::dsl::{FeatureSpace, HypothesisSpace, Object};
use crate::error::Result;

use super::PosteriorSample;

/// An outcome distribution for one query, restricted to a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    pub agent: Object,
    pub recipient: Object,
    pub outcomes: Vec<Object>,
    pub probs: Vec<f64>,
}

impl Predictive {
    /// Restrict a dense distribution over the result universe to
    /// `candidates` (all objects if `None`) and renormalize. If the
    /// candidates carry no mass the result is uniform over them.
    pub fn from_dense(space: &FeatureSpace, a: &Object, r: &Object, dense: &[f64], candidates: Option<&[Object]>) -> Self {
        let outcomes: Vec<Object> = match candidates {
            Some(c) => c.to_vec(),
            None => space.objects().collect(),
        };
        let mut probs: Vec<f64> = outcomes.iter().map(|o| dense[space.index_of(o)]).collect();
        normalize_or_uniform(&mut probs);
        Predictive {
            agent: a.clone(),
            recipient: r.clone(),
            outcomes,
            probs,
        }
    }

    pub fn uniform(a: &Object, r: &Object, candidates: &[Object]) -> Self {
        let n = candidates.len() as f64;
        Predictive {
            agent: a.clone(),
            recipient: r.clone(),
            outcomes: candidates.to_vec(),
            probs: vec![1.0 / n; candidates.len()],
        }
    }

    pub fn prob_of(&self, outcome: &Object) -> f64 {
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// CSV with one row per outcome: `rp_<feature>...,probability`.
    pub fn write_csv<W: Write>(&self, space: &FeatureSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = space.features().iter().map(|f| format!("rp_{}", f.name)).collect();
        header.push("probability".into());
        w.write_record(&header)?;
        for (o, p) in self.outcomes.iter().zip(&self.probs) {
            let mut row: Vec<String> = (0..space.len()).map(|k| space.label(o, k).to_string()).collect();
            row.push(p.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_json(&self, space: &FeatureSpace) -> serde_json::Value {
        json!({
            "agent": space.object_to_map(&self.agent),
            "recipient": space.object_to_map(&self.recipient),
            "outcomes": self.outcomes.iter().zip(&self.probs).map(|(o, p)| json!({
                "result": space.object_to_map(o),
                "probability": p,
            })).collect::<Vec<_>>(),
        })
    }
}

pub(crate) fn normalize_or_uniform(probs: &mut [f64]) {
    let z: f64 = probs.iter().sum();
    if z > 0.0 && z.is_finite() {
        probs.iter_mut().for_each(|p| *p /= z);
    } else {
        let n = probs.len() as f64;
        probs.iter_mut().for_each(|p| *p = 1.0 / n);
    }
}

/// Predictive with no learning data: the enumeration-weighted prior mixture.
pub fn prior_predictive(hyp: &HypothesisSpace, a: &Object, r: &Object, candidates: Option<&[Object]>) -> Predictive {
    Predictive::from_dense(hyp.space(), a, r, &hyp.prior_predictive(a, r), candidates)
}

/// Average over posterior samples of the query's outcome distribution. In
/// each sample the query is seated across the existing categories and a
/// fresh one by CRP weight times feature fit; a fresh category predicts
/// with the prior predictive.
pub fn posterior_predictive(
    samples: &[PosteriorSample],
    hyp: &HypothesisSpace,
    hyper: &Hyperparams,
    a: &Object,
    r: &Object,
    candidates: Option<&[Object]>,
) -> Predictive {
    let space = hyp.space();
    let prior = hyp.prior_predictive(a, r);
    let empty = CategoryState::new(space);
    let new_weight = hyper.alpha * empty.joint_feature_likelihood(a, r, hyper);
    let mut dense = vec![0.0; space.object_count()];
    for s in samples {
        let mut seats: Vec<(f64, Option<usize>)> = s
            .partition
            .categories()
            .iter()
            .map(|(id, c)| (c.size() as f64 * c.joint_feature_likelihood(a, r, hyper), Some(s.hypotheses[id])))
            .collect();
        seats.push((new_weight, None));
        let z: f64 = seats.iter().map(|x| x.0).sum();
        if z <= 0.0 {
            continue;
        }
        for (w, h) in seats {
            if w == 0.0 {
                continue;
            }
            let share = w / z / samples.len() as f64;
            match h {
                Some(h) => {
                    for (acc, p) in dense.iter_mut().zip(hyp.outcome_distribution(h, a, r)) {
                        *acc += share * p;
                    }
                }
                None => {
                    for (acc, p) in dense.iter_mut().zip(&prior) {
                        *acc += share * p;
                    }
                }
            }
        }
    }
    Predictive::from_dense(space, a, r, &dense, candidates)
}

/// Argmax outcome, ties broken uniformly at random.
pub fn choose<R: Rng + ?Sized>(pred: &Predictive, rng: &mut R) -> Object {
    let max = pred.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..pred.len())
        .filter(|&i| pred.probs[i] >= max - 1e-12 * max.abs())
        .collect();
    pred.outcomes[tied[rng.random_range(0..tied.len())]].clone()
}
