//! The probabilistic grammar over causal functions.
//!
//! | row             | productions                                   |
//! |-----------------|-----------------------------------------------|
//! | bind feature    | `S -> λφ: A` (feature drawn without replacement) |
//! | bind additional | `A -> B` \| `AND(B, S)`                        |
//! | relation        | `B -> φ(r') ⇐ C` \| `φ(r') ⇐ ¬C` (+ `+1 -1 > <` on ordinal features when extended) |
//! | reference       | `C -> D` \| `E`                                |
//! | relative        | `D -> φ(a)` \| `φ(r)`                          |
//! | absolute        | `E -> value` (uniform over the support)        |
//!
//! Once every feature is bound the bind-additional row can only produce
//! `B`, so every derivation terminates and the prior sums to one.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::function::{CausalAssertion, CausalFunction, Reference, Role};
use super::space::{FeatureDef, FeatureSpace, GrammarConfig, Object, Observation};
use crate::error::{Error, Result};

const EXTENDED_RELATIONS: usize = 6;

fn relation_options(feat: &FeatureDef, cfg: &GrammarConfig) -> usize {
    if cfg.extended_relations && feat.ordinal {
        EXTENDED_RELATIONS
    } else {
        2
    }
}

/// Draw one function by running the grammar forward.
pub fn sample_function<R: Rng + ?Sized>(space: &FeatureSpace, cfg: &GrammarConfig, rng: &mut R) -> CausalFunction {
    let mut unbound: Vec<usize> = (0..space.len()).collect();
    let mut assertions = Vec::new();
    loop {
        let target = unbound.swap_remove(rng.random_range(0..unbound.len()));
        assertions.push(sample_assertion(target, space.feature(target), cfg, rng));
        if unbound.is_empty() || !rng.random_bool(cfg.conjunction_prob) {
            break;
        }
    }
    assertions.sort();
    CausalFunction::from_sorted_unchecked(assertions)
}

fn sample_assertion<R: Rng + ?Sized>(target: usize, feat: &FeatureDef, cfg: &GrammarConfig, rng: &mut R) -> CausalAssertion {
    let role = |rng: &mut R| if rng.random_bool(0.5) { Role::Agent } else { Role::Recipient };
    let relation = rng.random_range(0..relation_options(feat, cfg));
    let (negated, reference) = match relation {
        0 | 1 => {
            let reference = if rng.random_bool(0.5) {
                match role(rng) {
                    Role::Agent => Reference::AgentFeature,
                    Role::Recipient => Reference::RecipientFeature,
                }
            } else {
                Reference::Absolute(rng.random_range(0..feat.len()))
            };
            (relation == 1, reference)
        }
        2 | 3 => {
            let d = if relation == 2 { 1 } else { -1 };
            match role(rng) {
                Role::Agent => (false, Reference::AgentPlus(d)),
                Role::Recipient => (false, Reference::RecipientPlus(d)),
            }
        }
        4 => (false, Reference::GreaterThan(role(rng))),
        _ => (false, Reference::LessThan(role(rng))),
    };
    CausalAssertion::new(target, negated, reference)
}

/// Probability of the relation/reference productions for one assertion, or
/// `None` if the grammar cannot derive it.
fn assertion_probability(a: &CausalAssertion, space: &FeatureSpace, cfg: &GrammarConfig) -> Option<f64> {
    let feat = space.feature(a.target);
    let relation = 1.0 / relation_options(feat, cfg) as f64;
    let extended = cfg.extended_relations && feat.ordinal;
    match a.reference {
        Reference::AgentFeature | Reference::RecipientFeature => Some(relation * 0.5 * 0.5),
        Reference::Absolute(_) => Some(relation * 0.5 / feat.len() as f64),
        Reference::AgentPlus(d) | Reference::RecipientPlus(d) if extended && !a.negated && d.abs() == 1 => {
            Some(relation * 0.5)
        }
        Reference::GreaterThan(_) | Reference::LessThan(_) if extended && !a.negated => Some(relation * 0.5),
        _ => None,
    }
}

/// Prior of a function: the product of production probabilities, summed
/// over the `k!` binding orders that derive the same conjunction.
pub fn prior_probability(f: &CausalFunction, space: &FeatureSpace, cfg: &GrammarConfig) -> Result<f64> {
    f.validate(space)?;
    let n = space.len();
    let k = f.len();
    let mut p = 1.0;
    for j in 0..k {
        // binding order count (j + 1) times the without-replacement pick
        p *= (j + 1) as f64 / (n - j) as f64;
        let unbound_after = n - j - 1;
        if j + 1 < k {
            p *= cfg.conjunction_prob;
        } else if unbound_after > 0 {
            p *= 1.0 - cfg.conjunction_prob;
        }
    }
    for a in f.assertions() {
        p *= assertion_probability(a, space, cfg).ok_or_else(|| {
            Error::InvalidFunction(format!(
                "`{}` is not derivable by this grammar",
                f.to_text(space)
            ))
        })?;
    }
    Ok(p)
}

/// Every assertion on `target` with the probability of its relation and
/// reference productions, expanded row by row.
fn assertion_productions(target: usize, feat: &FeatureDef, cfg: &GrammarConfig) -> Vec<(CausalAssertion, f64)> {
    let relation = 1.0 / relation_options(feat, cfg) as f64;
    let mut out = Vec::new();
    for negated in [false, true] {
        // C -> D
        for reference in [Reference::AgentFeature, Reference::RecipientFeature] {
            out.push((CausalAssertion::new(target, negated, reference), relation * 0.5 * 0.5));
        }
        // C -> E
        for v in 0..feat.len() {
            out.push((
                CausalAssertion::new(target, negated, Reference::Absolute(v)),
                relation * 0.5 / feat.len() as f64,
            ));
        }
    }
    if relation_options(feat, cfg) == EXTENDED_RELATIONS {
        for reference in [
            Reference::AgentPlus(1),
            Reference::RecipientPlus(1),
            Reference::AgentPlus(-1),
            Reference::RecipientPlus(-1),
            Reference::GreaterThan(Role::Agent),
            Reference::GreaterThan(Role::Recipient),
            Reference::LessThan(Role::Agent),
            Reference::LessThan(Role::Recipient),
        ] {
            out.push((CausalAssertion::new(target, false, reference), relation * 0.5));
        }
    }
    out
}

/// All functions with at most `cap` conjuncts and their priors, in canonical
/// order. Derivations that yield the same canonical function are summed.
pub fn enumerate_functions(space: &FeatureSpace, cfg: &GrammarConfig) -> Result<Vec<(CausalFunction, f64)>> {
    cfg.validate()?;
    let cap = cfg.cap_for(space);
    let productions: Vec<Vec<(CausalAssertion, f64)>> = (0..space.len())
        .map(|k| assertion_productions(k, space.feature(k), cfg))
        .collect();
    let mut acc: BTreeMap<CausalFunction, f64> = BTreeMap::new();
    let mut walker = Walker {
        productions: &productions,
        cfg,
        cap,
        acc: &mut acc,
        derivations: 0,
        limit: cfg.max_hypotheses,
    };
    let unbound: Vec<usize> = (0..space.len()).collect();
    walker.bind(&unbound, &mut Vec::new(), 1.0)?;
    Ok(acc.into_iter().collect())
}

struct Walker<'a> {
    productions: &'a [Vec<(CausalAssertion, f64)>],
    cfg: &'a GrammarConfig,
    cap: usize,
    acc: &'a mut BTreeMap<CausalFunction, f64>,
    derivations: usize,
    limit: usize,
}

impl Walker<'_> {
    fn emit(&mut self, partial: &[CausalAssertion], p: f64) -> Result<()> {
        self.derivations += 1;
        let mut sorted = partial.to_vec();
        sorted.sort();
        *self.acc.entry(CausalFunction::from_sorted_unchecked(sorted)).or_insert(0.0) += p;
        if self.acc.len() > self.limit {
            return Err(Error::EnumerationOverflow { limit: self.limit });
        }
        Ok(())
    }

    // S -> λφ: A
    fn bind(&mut self, unbound: &[usize], partial: &mut Vec<CausalAssertion>, p: f64) -> Result<()> {
        let pick = p / unbound.len() as f64;
        for (i, &feature) in unbound.iter().enumerate() {
            let rest: Vec<usize> = unbound.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &f)| f).collect();
            for &(assertion, q) in &self.productions[feature] {
                partial.push(assertion);
                if rest.is_empty() {
                    // A -> B forced
                    self.emit(partial, pick * q)?;
                } else {
                    self.emit(partial, pick * q * (1.0 - self.cfg.conjunction_prob))?;
                    if partial.len() < self.cap {
                        self.bind(&rest, partial, pick * q * self.cfg.conjunction_prob)?;
                    }
                }
                partial.pop();
            }
        }
        Ok(())
    }
}

/// An enumerated hypothesis set with priors; the exact-inference substrate
/// shared by every model.
#[derive(Debug, Clone)]
pub struct HypothesisSpace {
    space: FeatureSpace,
    grammar: GrammarConfig,
    functions: Vec<CausalFunction>,
    priors: Vec<f64>,
}

impl HypothesisSpace {
    pub fn build(space: &FeatureSpace, grammar: &GrammarConfig) -> Result<Self> {
        let (functions, priors) = enumerate_functions(space, grammar)?.into_iter().unzip();
        Ok(HypothesisSpace {
            space: space.clone(),
            grammar: grammar.clone(),
            functions,
            priors,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn grammar(&self) -> &GrammarConfig {
        &self.grammar
    }

    pub fn functions(&self) -> &[CausalFunction] {
        &self.functions
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, h: usize) -> &CausalFunction {
        &self.functions[h]
    }

    pub fn index_of(&self, f: &CausalFunction) -> Option<usize> {
        self.functions.binary_search(f).ok()
    }

    pub fn total_mass(&self) -> f64 {
        self.priors.iter().sum()
    }

    /// `P(d | f)` for every hypothesis.
    pub fn likelihoods(&self, obs: &Observation) -> Vec<f64> {
        self.functions
            .iter()
            .map(|f| f.likelihood(obs, &self.space, self.grammar.epsilon))
            .collect()
    }

    /// Normalized `P_G(f) Π_i P(d_i | f)` over the enumeration.
    pub fn posterior(&self, data: &[Observation]) -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = data.iter().map(|d| self.likelihoods(d)).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        self.posterior_from_rows(&refs)
            .ok_or_else(|| Error::NoConsistentFunction { members: (0..data.len()).collect() })
    }

    /// Posterior from precomputed likelihood rows; `None` if no hypothesis
    /// has positive mass.
    pub fn posterior_from_rows(&self, rows: &[&[f64]]) -> Option<Vec<f64>> {
        let mut w: Vec<f64> = self.priors.clone();
        for row in rows {
            for (wi, l) in w.iter_mut().zip(row.iter()) {
                *wi *= l;
            }
        }
        let z: f64 = w.iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= z);
        Some(w)
    }

    /// Dense outcome distribution over the result universe for one function.
    pub fn outcome_distribution(&self, h: usize, a: &Object, r: &Object) -> Vec<f64> {
        self.functions[h].apply(a, r, &self.space).outcome_distribution(&self.space)
    }

    /// Weighted mixture of function outcome distributions. Weights need not
    /// be normalized; functions with empty domains contribute nothing.
    pub fn mixture_predictive(&self, weights: &[f64], a: &Object, r: &Object) -> Vec<f64> {
        let mut out = vec![0.0; self.space.object_count()];
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return out;
        }
        for (h, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let d = self.functions[h].apply(a, r, &self.space);
            let size = d.size();
            if size == 0 {
                continue;
            }
            let share = w / total / size as f64;
            for o in d.objects() {
                out[self.space.index_of(&o)] += share;
            }
        }
        out
    }

    /// Prior predictive `Σ_f P_G(f) P(r' | f, a, r)` over the enumeration.
    pub fn prior_predictive(&self, a: &Object, r: &Object) -> Vec<f64> {
        self.mixture_predictive(&self.priors, a, r)
    }

    /// Draw an index proportional to `weights`.
    pub fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
        WeightedIndex::new(weights).ok().map(|d| d.sample(rng))
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        Self::sample_weighted(&self.priors, rng).expect("prior has positive mass")
    }
}
