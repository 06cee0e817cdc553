//! LoCaLaPro: a sequential learner that seats each generalization query in
//! a category on the spot, commits to it, and predicts with that category's
//! function. Categories and their functions are never revisited.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::categories::{feature_likelihood, CategoryState, Hyperparams};
use crate::dsl::{FeatureSpace, HypothesisSpace, Object, Observation};
use crate::error::{Error, Result};
use crate::infer::Predictive;
use crate::rng::stream;

/// Committed categories of one run.
#[derive(Debug, Clone)]
pub struct ProcessState {
    categories: Vec<CategoryState>,
    hypotheses: Vec<usize>,
    next_member: usize,
}

impl ProcessState {
    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[CategoryState] {
        &self.categories
    }

    /// Hypothesis index committed to category `c`.
    pub fn hypothesis(&self, c: usize) -> usize {
        self.hypotheses[c]
    }
}

/// One generalization step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub category: usize,
    pub new_category: bool,
    /// The committed function had no outcome among the candidates, so the
    /// prediction was drawn uniformly from them.
    pub fallback: bool,
    pub prediction: Object,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub steps: Vec<TraceStep>,
    pub final_categories: usize,
}

/// A generalization query with its response options.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub agent: Object,
    pub recipient: Object,
    pub candidates: Vec<Object>,
}

/// Seat the learning observations and commit a function to each category.
///
/// A single observation forms category 1. Several observations are seated
/// in one sequential pass, each weighted by CRP size, feature fit and the
/// category's current function-marginal predictive of its result; each
/// category's function is then drawn from its exact posterior.
pub fn init_process<R: Rng + ?Sized>(learning: &[Observation], hyper: &Hyperparams, hyp: &HypothesisSpace, rng: &mut R) -> Result<ProcessState> {
    hyper.validate()?;
    if learning.is_empty() || learning.iter().any(|d| d.result.is_none()) {
        return Err(Error::InvalidParam {
            name: "learning",
            msg: "need at least one complete learning observation".into(),
        });
    }
    let space = hyp.space();
    let lik: Vec<Vec<f64>> = learning.iter().map(|d| hyp.likelihoods(d)).collect();
    let mut categories: Vec<CategoryState> = Vec::new();
    // running unnormalized function posterior per category
    let mut weights: Vec<Vec<f64>> = Vec::new();
    for (i, d) in learning.iter().enumerate() {
        let marginal = |w: &[f64]| {
            let z: f64 = w.iter().sum();
            if z > 0.0 {
                w.iter().zip(&lik[i]).map(|(p, l)| p * l).sum::<f64>() / z
            } else {
                0.0
            }
        };
        let mut seat: Vec<f64> = categories
            .iter()
            .zip(&weights)
            .map(|(c, w)| c.size() as f64 * feature_likelihood(&d.agent, &d.recipient, c, hyper) * marginal(w))
            .collect();
        let empty = CategoryState::new(space);
        seat.push(hyper.alpha * feature_likelihood(&d.agent, &d.recipient, &empty, hyper) * marginal(hyp.priors()));
        let pick = HypothesisSpace::sample_weighted(&seat, rng).ok_or_else(|| Error::NoConsistentFunction { members: vec![i] })?;
        if pick == categories.len() {
            categories.push(empty);
            weights.push(hyp.priors().to_vec());
        }
        categories[pick].add(i, &d.agent, &d.recipient);
        weights[pick].iter_mut().zip(&lik[i]).for_each(|(w, l)| *w *= l);
    }
    let mut hypotheses = Vec::with_capacity(categories.len());
    for (c, w) in categories.iter_mut().zip(&weights) {
        let h = HypothesisSpace::sample_weighted(w, rng).ok_or_else(|| Error::NoConsistentFunction { members: c.members().to_vec() })?;
        c.function = Some(hyp.function(h).clone());
        hypotheses.push(h);
    }
    Ok(ProcessState {
        categories,
        hypotheses,
        next_member: learning.len(),
    })
}

/// Seat one query by CRP size times feature fit, commit, and predict.
pub fn process_step<R: Rng + ?Sized>(state: &mut ProcessState, query: &Query, hyper: &Hyperparams, hyp: &HypothesisSpace, rng: &mut R) -> TraceStep {
    let (a, r) = (&query.agent, &query.recipient);
    let space = hyp.space();
    let empty = CategoryState::new(space);
    let mut seat: Vec<f64> = state
        .categories
        .iter()
        .map(|c| c.size() as f64 * feature_likelihood(a, r, c, hyper))
        .collect();
    seat.push(hyper.alpha * feature_likelihood(a, r, &empty, hyper));
    let pick = HypothesisSpace::sample_weighted(&seat, rng).unwrap_or(seat.len() - 1);
    let new_category = pick == state.categories.len();
    if new_category {
        let h = hyp.sample_prior(rng);
        let mut c = empty;
        c.function = Some(hyp.function(h).clone());
        state.categories.push(c);
        state.hypotheses.push(h);
    }
    let domain = hyp.function(state.hypotheses[pick]).apply(a, r, space);
    let options: Vec<&Object> = query.candidates.iter().filter(|o| domain.contains(o)).collect();
    let fallback = options.is_empty();
    let prediction = if fallback {
        query.candidates[rng.random_range(0..query.candidates.len())].clone()
    } else {
        options[rng.random_range(0..options.len())].clone()
    };
    state.categories[pick].add(state.next_member, a, r);
    state.next_member += 1;
    TraceStep {
        category: pick,
        new_category,
        fallback,
        prediction,
    }
}

/// One complete run over a task sequence.
pub fn run_process<R: Rng + ?Sized>(learning: &[Observation], sequence: &[Query], hyper: &Hyperparams, hyp: &HypothesisSpace, rng: &mut R) -> Result<RunTrace> {
    let mut state = init_process(learning, hyper, hyp, rng)?;
    let steps = sequence
        .iter()
        .map(|q| process_step(&mut state, q, hyper, hyp, rng))
        .collect();
    Ok(RunTrace {
        steps,
        final_categories: state.num_categories(),
    })
}

/// `n_runs` independent runs in parallel, run `i` on stream `(seed, i)`.
pub fn simulate_runs(learning: &[Observation], sequence: &[Query], hyper: &Hyperparams, hyp: &HypothesisSpace, n_runs: usize, seed: u64) -> Result<Vec<RunTrace>> {
    (0..n_runs)
        .into_par_iter()
        .map(|i| run_process(learning, sequence, hyper, hyp, &mut stream(seed, &[i as u64])))
        .collect()
}

/// Per-trial prediction frequencies over the trial's candidates.
pub fn prediction_frequencies(traces: &[RunTrace], sequence: &[Query]) -> Vec<Predictive> {
    sequence
        .iter()
        .enumerate()
        .map(|(t, q)| {
            let mut probs = vec![0.0; q.candidates.len()];
            for tr in traces {
                if let Some(i) = q.candidates.iter().position(|c| *c == tr.steps[t].prediction) {
                    probs[i] += 1.0 / traces.len() as f64;
                }
            }
            Predictive {
                agent: q.agent.clone(),
                recipient: q.recipient.clone(),
                outcomes: q.candidates.clone(),
                probs,
            }
        })
        .collect()
}

/// Population-averaged predictions of `n_runs` simulated learners.
pub fn averaged_predictions(learning: &[Observation], sequence: &[Query], hyper: &Hyperparams, hyp: &HypothesisSpace, n_runs: usize, seed: u64) -> Result<Vec<Predictive>> {
    if n_runs == 0 {
        return Err(Error::InvalidParam {
            name: "runs",
            msg: "need at least one run".into(),
        });
    }
    let traces = simulate_runs(learning, sequence, hyper, hyp, n_runs, seed)?;
    Ok(prediction_frequencies(&traces, sequence))
}

/// `run,trial,category,new_category,fallback,rp_<feature>...`; trials and
/// categories are 1-based.
pub fn write_traces_csv<W: Write>(traces: &[RunTrace], space: &FeatureSpace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["run", "trial", "category", "new_category", "fallback"].map(String::from).to_vec();
    header.extend(space.features().iter().map(|f| format!("rp_{}", f.name)));
    w.write_record(&header)?;
    for (run, tr) in traces.iter().enumerate() {
        for (t, s) in tr.steps.iter().enumerate() {
            let mut row = vec![
                run.to_string(),
                (t + 1).to_string(),
                (s.category + 1).to_string(),
                s.new_category.to_string(),
                s.fallback.to_string(),
            ];
            row.extend((0..space.len()).map(|k| space.label(&s.prediction, k).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
