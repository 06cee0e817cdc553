use std::fmt::Write as _;

use super::space::{FeatureSpace, Object, Observation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Agent,
    Recipient,
}

impl Role {
    fn tag(self) -> &'static str {
        match self {
            Role::Agent => "a",
            Role::Recipient => "r",
        }
    }

    fn pick(self, a: &Object, r: &Object, k: usize) -> usize {
        match self {
            Role::Agent => a.value(k),
            Role::Recipient => r.value(k),
        }
    }
}

/// Right-hand side of an assertion. Relative references always read the
/// assertion's own target feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reference {
    AgentFeature,
    RecipientFeature,
    Absolute(usize),
    AgentPlus(i32),
    RecipientPlus(i32),
    GreaterThan(Role),
    LessThan(Role),
}

impl Reference {
    fn is_ordinal_only(self) -> bool {
        matches!(
            self,
            Reference::AgentPlus(_)
                | Reference::RecipientPlus(_)
                | Reference::GreaterThan(_)
                | Reference::LessThan(_)
        )
    }
}

/// `φ_target(r') ⇐ [¬] reference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalAssertion {
    pub target: usize,
    pub negated: bool,
    pub reference: Reference,
}

impl CausalAssertion {
    pub fn new(target: usize, negated: bool, reference: Reference) -> Self {
        CausalAssertion {
            target,
            negated,
            reference,
        }
    }

    /// Bitmask over the target feature's support of values the result may take.
    pub fn satisfying(&self, a: &Object, r: &Object, space: &FeatureSpace) -> u64 {
        let k = self.target;
        let v = space.feature(k).len();
        let full = 1u64.checked_shl(v as u32).map_or(u64::MAX, |x| x - 1);
        let shifted = |base: usize, delta: i32| -> u64 {
            let x = base as i64 + delta as i64;
            if x >= 0 && (x as usize) < v {
                1u64 << x
            } else {
                0
            }
        };
        let set = match self.reference {
            Reference::AgentFeature => 1u64 << a.value(k),
            Reference::RecipientFeature => 1u64 << r.value(k),
            Reference::Absolute(x) => 1u64 << x,
            Reference::AgentPlus(d) => shifted(a.value(k), d),
            Reference::RecipientPlus(d) => shifted(r.value(k), d),
            Reference::GreaterThan(role) => {
                let base = role.pick(a, r, k);
                let at_or_below = 1u64
                    .checked_shl(base as u32 + 1)
                    .map_or(u64::MAX, |x| x - 1);
                full & !at_or_below
            }
            Reference::LessThan(role) => {
                let base = role.pick(a, r, k);
                (1u64 << base) - 1
            }
        };
        if self.negated {
            full & !set
        } else {
            set
        }
    }
}

/// A conjunction of assertions with pairwise distinct targets, kept sorted
/// by target feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalFunction {
    assertions: Vec<CausalAssertion>,
}

impl CausalFunction {
    /// Validates against `space` and sorts into canonical order.
    pub fn new(mut assertions: Vec<CausalAssertion>, space: &FeatureSpace) -> Result<Self> {
        assertions.sort();
        let f = CausalFunction { assertions };
        f.validate(space)?;
        Ok(f)
    }

    pub(crate) fn from_sorted_unchecked(assertions: Vec<CausalAssertion>) -> Self {
        debug_assert!(assertions.windows(2).all(|w| w[0].target < w[1].target));
        CausalFunction { assertions }
    }

    pub fn single(target: usize, negated: bool, reference: Reference, space: &FeatureSpace) -> Result<Self> {
        Self::new(vec![CausalAssertion::new(target, negated, reference)], space)
    }

    pub fn assertions(&self) -> &[CausalAssertion] {
        &self.assertions
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn validate(&self, space: &FeatureSpace) -> Result<()> {
        if self.assertions.is_empty() {
            return Err(Error::InvalidFunction("no assertions".into()));
        }
        if self.assertions.len() > space.len() {
            return Err(Error::InvalidFunction(
                "more assertions than features".into(),
            ));
        }
        for (i, a) in self.assertions.iter().enumerate() {
            if a.target >= space.len() {
                return Err(Error::InvalidFunction(format!(
                    "target feature {} out of range",
                    a.target
                )));
            }
            if self.assertions[..i].iter().any(|b| b.target == a.target) {
                return Err(Error::InvalidFunction(format!(
                    "feature `{}` asserted twice",
                    space.feature(a.target).name
                )));
            }
            let feat = space.feature(a.target);
            if let Reference::Absolute(x) = a.reference {
                if x >= feat.len() {
                    return Err(Error::InvalidFunction(format!(
                        "absolute value {x} outside support of `{}`",
                        feat.name
                    )));
                }
            }
            if a.reference.is_ordinal_only() && !feat.ordinal {
                return Err(Error::InvalidFunction(format!(
                    "ordinal relation on categorical feature `{}`",
                    feat.name
                )));
            }
        }
        Ok(())
    }

    /// The outcome domain `D(f(a, r))`. Unasserted features keep the
    /// recipient's value.
    pub fn apply(&self, a: &Object, r: &Object, space: &FeatureSpace) -> Domain {
        let mut masks: Vec<u64> = r.values().iter().map(|&v| 1u64 << v).collect();
        for asr in &self.assertions {
            masks[asr.target] = asr.satisfying(a, r, space);
        }
        Domain { masks }
    }

    /// Hard likelihood `1/|D|` if the result is in the domain, else 0.
    pub fn hard_likelihood(&self, agent: &Object, recipient: &Object, result: &Object, space: &FeatureSpace) -> f64 {
        let d = self.apply(agent, recipient, space);
        if d.contains(result) {
            1.0 / d.size() as f64
        } else {
            0.0
        }
    }

    /// Likelihood of a complete observation, mixed with a uniform draw over
    /// the whole result universe when `epsilon > 0`.
    ///
    /// Panics if the observation has no result.
    pub fn likelihood(&self, obs: &Observation, space: &FeatureSpace, epsilon: f64) -> f64 {
        let result = obs.result.as_ref().expect("likelihood needs a complete observation");
        let hard = self.hard_likelihood(&obs.agent, &obs.recipient, result, space);
        if epsilon == 0.0 {
            hard
        } else {
            (1.0 - epsilon) * hard + epsilon / space.object_count() as f64
        }
    }

    /// Canonical text form, e.g. `and(color(rp)<-color(a), shape(rp)<-square)`.
    pub fn to_text(&self, space: &FeatureSpace) -> String {
        let mut out = String::new();
        if self.assertions.len() > 1 {
            out.push_str("and(");
        }
        for (i, a) in self.assertions.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_assertion(&mut out, a, space);
        }
        if self.assertions.len() > 1 {
            out.push(')');
        }
        out
    }

    pub fn parse(text: &str, space: &FeatureSpace) -> Result<Self> {
        super::parse::parse_function(text, space)
    }
}

fn write_assertion(out: &mut String, a: &CausalAssertion, space: &FeatureSpace) {
    let feat = space.feature(a.target);
    let name = &feat.name;
    let _ = write!(out, "{name}(rp)<-");
    if a.negated {
        out.push_str("not(");
    }
    match a.reference {
        Reference::AgentFeature => {
            let _ = write!(out, "{name}(a)");
        }
        Reference::RecipientFeature => {
            let _ = write!(out, "{name}(r)");
        }
        Reference::Absolute(x) => out.push_str(&feat.values[x]),
        Reference::AgentPlus(d) => {
            let _ = write!(out, "{name}(a){d:+}");
        }
        Reference::RecipientPlus(d) => {
            let _ = write!(out, "{name}(r){d:+}");
        }
        Reference::GreaterThan(role) => {
            let _ = write!(out, ">{name}({})", role.tag());
        }
        Reference::LessThan(role) => {
            let _ = write!(out, "<{name}({})", role.tag());
        }
    }
    if a.negated {
        out.push(')');
    }
}

/// Outcome domain of a function application: a Cartesian product of
/// per-feature satisfying sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    masks: Vec<u64>,
}

impl Domain {
    pub fn size(&self) -> usize {
        self.masks.iter().map(|m| m.count_ones() as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.contains(&0)
    }

    pub fn contains(&self, obj: &Object) -> bool {
        obj.values()
            .iter()
            .zip(&self.masks)
            .all(|(&v, &m)| v < 64 && m & (1u64 << v) != 0)
    }

    /// Members in universe index order.
    pub fn objects(&self) -> Vec<Object> {
        let per_feature: Vec<Vec<usize>> = self
            .masks
            .iter()
            .map(|&m| (0..64).filter(|&v| m & (1u64 << v) != 0).collect())
            .collect();
        let mut out = vec![Vec::new()];
        for vals in &per_feature {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        if self.is_empty() {
            return Vec::new();
        }
        out.into_iter().map(Object).collect()
    }

    /// Uniform outcome distribution over the domain, dense over the universe.
    /// All zeros for an empty domain.
    pub fn outcome_distribution(&self, space: &FeatureSpace) -> Vec<f64> {
        let mut dist = vec![0.0; space.object_count()];
        let members = self.objects();
        if members.is_empty() {
            return dist;
        }
        let p = 1.0 / members.len() as f64;
        for o in &members {
            dist[space.index_of(o)] = p;
        }
        dist
    }
}
