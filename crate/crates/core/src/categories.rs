//! Building blocks of the extended Dirichlet process: the CRP seating prior,
//! per-role Dirichlet-smoothed feature tables, and category statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsl::{CausalFunction, FeatureSpace, Object, Role};
use crate::error::{Error, Result};

/// `alpha` (CRP concentration), `beta` (symmetric Dirichlet pseudo-count)
/// and `gamma` (weight on agent features).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Hyperparams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let h = Hyperparams { alpha, beta, gamma };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParam {
                name: "alpha",
                msg: format!("must be a positive finite number, got {}", self.alpha),
            });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParam {
                name: "beta",
                msg: format!("must be nonnegative and finite, got {}", self.beta),
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParam {
                name: "gamma",
                msg: format!("must lie in [0, 1], got {}", self.gamma),
            });
        }
        Ok(())
    }
}

/// One causal category: its members, per-role value counts and the
/// function attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryState {
    members: Vec<usize>,
    agent: Vec<Vec<u32>>,
    recipient: Vec<Vec<u32>>,
    pub function: Option<CausalFunction>,
}

impl CategoryState {
    pub fn new(space: &FeatureSpace) -> Self {
        let zeros: Vec<Vec<u32>> = space.features().iter().map(|f| vec![0; f.len()]).collect();
        CategoryState {
            members: Vec::new(),
            agent: zeros.clone(),
            recipient: zeros,
            function: None,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn counts(&self, role: Role) -> &[Vec<u32>] {
        match role {
            Role::Agent => &self.agent,
            Role::Recipient => &self.recipient,
        }
    }

    pub fn add(&mut self, id: usize, a: &Object, r: &Object) {
        if let Err(pos) = self.members.binary_search(&id) {
            self.members.insert(pos, id);
            for (k, (&va, &vr)) in a.values().iter().zip(r.values()).enumerate() {
                self.agent[k][va] += 1;
                self.recipient[k][vr] += 1;
            }
        }
    }

    pub fn remove(&mut self, id: usize, a: &Object, r: &Object) {
        if let Ok(pos) = self.members.binary_search(&id) {
            self.members.remove(pos);
            for (k, (&va, &vr)) in a.values().iter().zip(r.values()).enumerate() {
                self.agent[k][va] -= 1;
                self.recipient[k][vr] -= 1;
            }
        }
    }

    /// Per-feature smoothed value distribution for one role.
    pub fn mean_feature_vector(&self, role: Role, beta: f64) -> Vec<Vec<f64>> {
        let n = self.size() as f64;
        self.counts(role)
            .iter()
            .map(|counts| {
                let v = counts.len() as f64;
                if n == 0.0 && beta == 0.0 {
                    return vec![1.0 / v; counts.len()];
                }
                counts.iter().map(|&c| (c as f64 + beta) / (n + v * beta)).collect()
            })
            .collect()
    }

    /// Probability of `obj` under the role's mean feature vector.
    pub fn role_likelihood(&self, obj: &Object, role: Role, beta: f64) -> f64 {
        let n = self.size() as f64;
        self.counts(role)
            .iter()
            .zip(obj.values())
            .map(|(counts, &v)| {
                let size = counts.len() as f64;
                if n == 0.0 && beta == 0.0 {
                    1.0 / size
                } else {
                    (counts[v] as f64 + beta) / (n + size * beta)
                }
            })
            .product()
    }

    /// Log probability of the role's member sequence under the
    /// Dirichlet-multinomial with pseudo-count `beta`.
    pub fn ln_role_marginal(&self, role: Role, beta: f64) -> f64 {
        let n = self.size();
        self.counts(role)
            .iter()
            .map(|counts| {
                if n == 0 {
                    return 0.0;
                }
                let v = counts.len() as f64;
                if beta == 0.0 {
                    // limit beta -> 0: all members share one value with prob 1/V
                    return if counts.iter().filter(|&&c| c > 0).count() == 1 { -v.ln() } else { f64::NEG_INFINITY };
                }
                let num: f64 = counts
                    .iter()
                    .map(|&c| (0..c).map(|j| (beta + j as f64).ln()).sum::<f64>())
                    .sum();
                let den: f64 = (0..n).map(|j| (v * beta + j as f64).ln()).sum();
                num - den
            })
            .sum()
    }

    /// Posterior probability that the category is agent-focused given its
    /// members, starting from prior `gamma`.
    pub fn agent_focus(&self, hyper: &Hyperparams) -> f64 {
        if hyper.gamma == 0.0 || hyper.gamma == 1.0 || self.is_empty() {
            return hyper.gamma;
        }
        let la = hyper.gamma.ln() + self.ln_role_marginal(Role::Agent, hyper.beta);
        let lr = (1.0 - hyper.gamma).ln() + self.ln_role_marginal(Role::Recipient, hyper.beta);
        if la == f64::NEG_INFINITY && lr == f64::NEG_INFINITY {
            return hyper.gamma;
        }
        1.0 / (1.0 + (lr - la).exp())
    }

    /// Log of the focus-marginalized joint feature probability of the members.
    pub fn ln_feature_marginal(&self, hyper: &Hyperparams) -> f64 {
        let la = self.ln_role_marginal(Role::Agent, hyper.beta);
        let lr = self.ln_role_marginal(Role::Recipient, hyper.beta);
        let terms = [
            if hyper.gamma > 0.0 { hyper.gamma.ln() + la } else { f64::NEG_INFINITY },
            if hyper.gamma < 1.0 { (1.0 - hyper.gamma).ln() + lr } else { f64::NEG_INFINITY },
        ];
        let m = terms[0].max(terms[1]);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }

    /// Predictive probability of a new (a, r) pair joining this category:
    /// the ratio of focus-marginalized joint feature probabilities, which
    /// weights the two role tables by the category's posterior focus.
    pub fn joint_feature_likelihood(&self, a: &Object, r: &Object, hyper: &Hyperparams) -> f64 {
        let w = self.agent_focus(hyper);
        w * self.role_likelihood(a, Role::Agent, hyper.beta)
            + (1.0 - w) * self.role_likelihood(r, Role::Recipient, hyper.beta)
    }

    pub fn snapshot(&self, space: &FeatureSpace) -> CategorySnapshot {
        let tables = |counts: &[Vec<u32>]| {
            space
                .features()
                .iter()
                .zip(counts)
                .map(|(f, c)| (f.name.clone(), f.values.iter().cloned().zip(c.iter().copied()).collect()))
                .collect()
        };
        CategorySnapshot {
            members: self.members.clone(),
            agent_counts: tables(&self.agent),
            recipient_counts: tables(&self.recipient),
            function: self.function.as_ref().map(|f| f.to_text(space)),
        }
    }
}

/// `γ·L_A + (1−γ)·L_R`: the category's mean-feature fit of a pair with the
/// focus weight taken at face value.
pub fn feature_likelihood(a: &Object, r: &Object, cat: &CategoryState, hyper: &Hyperparams) -> f64 {
    hyper.gamma * cat.role_likelihood(a, Role::Agent, hyper.beta)
        + (1.0 - hyper.gamma) * cat.role_likelihood(r, Role::Recipient, hyper.beta)
}

/// Per-feature probability tables for one role of a category.
pub fn mean_feature_vector(cat: &CategoryState, role: Role, beta: f64) -> Vec<Vec<f64>> {
    cat.mean_feature_vector(role, beta)
}

/// A seat in the CRP: an existing category or a fresh one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Seat {
    Existing(usize),
    New,
}

/// Assignment of observations to categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<Option<usize>>,
    categories: BTreeMap<usize, CategoryState>,
    next_id: usize,
}

impl Partition {
    /// A partition over `n` observations, none of them seated.
    pub fn new(n: usize) -> Self {
        Partition {
            assignment: vec![None; n],
            categories: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|z| z.is_some()).count()
    }

    pub fn category_of(&self, i: usize) -> Option<usize> {
        self.assignment[i]
    }

    pub fn categories(&self) -> &BTreeMap<usize, CategoryState> {
        &self.categories
    }

    pub fn category(&self, id: usize) -> Option<&CategoryState> {
        self.categories.get(&id)
    }

    pub fn category_mut(&mut self, id: usize) -> Option<&mut CategoryState> {
        self.categories.get_mut(&id)
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    /// Seat observation `i`; returns the category id used.
    pub fn assign(&mut self, i: usize, seat: Seat, a: &Object, r: &Object, space: &FeatureSpace) -> usize {
        self.unassign(i, a, r);
        let id = match seat {
            Seat::Existing(id) => id,
            Seat::New => {
                let id = self.next_id;
                self.next_id += 1;
                self.categories.insert(id, CategoryState::new(space));
                id
            }
        };
        self.categories
            .get_mut(&id)
            .expect("seat refers to a registered category")
            .add(i, a, r);
        self.assignment[i] = Some(id);
        id
    }

    /// Remove observation `i` from its category, dropping the category if it
    /// empties. Returns the category it left.
    pub fn unassign(&mut self, i: usize, a: &Object, r: &Object) -> Option<usize> {
        let id = self.assignment[i].take()?;
        let cat = self.categories.get_mut(&id).expect("assignment is consistent");
        cat.remove(i, a, r);
        if cat.is_empty() {
            self.categories.remove(&id);
        }
        Some(id)
    }

    /// Group label per observation, renumbered by first appearance. Two
    /// partitions with the same blocks give the same vector.
    pub fn canonical_labels(&self) -> Vec<Option<usize>> {
        let mut map = BTreeMap::new();
        self.assignment
            .iter()
            .map(|z| {
                z.map(|id| {
                    let next = map.len();
                    *map.entry(id).or_insert(next)
                })
            })
            .collect()
    }

    pub fn snapshot(&self, space: &FeatureSpace) -> Vec<CategorySnapshot> {
        self.categories.values().map(|c| c.snapshot(space)).collect()
    }
}

/// Serializable view of a category for diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CategorySnapshot {
    pub members: Vec<usize>,
    pub agent_counts: BTreeMap<String, BTreeMap<String, u32>>,
    pub recipient_counts: BTreeMap<String, BTreeMap<String, u32>>,
    pub function: Option<String>,
}

/// Collapsed CRP seating distribution for observation `i`, with `i` itself
/// excluded from the counts. Existing categories come first in id order,
/// `Seat::New` last.
pub fn crp_weights(partition: &Partition, i: usize, alpha: f64) -> Result<Vec<(Seat, f64)>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParam {
            name: "alpha",
            msg: format!("must be a positive finite number, got {alpha}"),
        });
    }
    let own = partition.category_of(i);
    let assigned = partition.assigned_count() - usize::from(own.is_some());
    let denom = assigned as f64 + alpha;
    let mut out = Vec::with_capacity(partition.num_categories() + 1);
    for (&id, cat) in partition.categories() {
        let n = cat.size() - usize::from(own == Some(id));
        if n > 0 {
            out.push((Seat::Existing(id), n as f64 / denom));
        }
    }
    out.push((Seat::New, alpha / denom));
    Ok(out)
}
