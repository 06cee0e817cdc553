//! Brute-force oracles shared by the integration tests and the acceptance
//! harness. They share no code paths with the samplers they check.
#![allow(dead_code)]

use std::collections::BTreeMap;

use causal_laws::dsl::{CausalAssertion, FeatureDef, FeatureSpace, HypothesisSpace, Object, Observation, Reference, Role};
use statrs::function::gamma::ln_gamma;

pub fn binary2() -> FeatureSpace {
    FeatureSpace::new(vec![
        FeatureDef::new("size", &["small", "large"], false),
        FeatureDef::new("tone", &["light", "dark"], false),
    ])
    .unwrap()
}

pub fn obs(space: &FeatureSpace, a: &str, r: &str, rp: &str) -> Observation {
    Observation::new(
        space.parse_object(a).unwrap(),
        space.parse_object(r).unwrap(),
        space.parse_object(rp).unwrap(),
    )
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=max {
            prefix.push(b);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

fn blocks(labels: &[usize]) -> Vec<Vec<usize>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    (0..k)
        .map(|b| (0..labels.len()).filter(|&i| labels[i] == b).collect())
        .collect()
}

/// Dirichlet-multinomial log probability of a sequence of values from a
/// `v`-valued feature, via log-gamma. `beta = 0` takes the limit.
fn ln_dm(values: &[usize], v: usize, beta: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; v];
    for &x in values {
        counts[x] += 1;
    }
    if beta == 0.0 {
        return if counts.iter().filter(|&&c| c > 0).count() == 1 { -(v as f64).ln() } else { f64::NEG_INFINITY };
    }
    let vb = v as f64 * beta;
    ln_gamma(vb) - ln_gamma(n as f64 + vb)
        + counts.iter().map(|&c| ln_gamma(c as f64 + beta) - ln_gamma(beta)).sum::<f64>()
}

fn role_joint(space: &FeatureSpace, objs: &[&Object], beta: f64) -> f64 {
    (0..space.len())
        .map(|k| {
            let vals: Vec<usize> = objs.iter().map(|o| o.value(k)).collect();
            ln_dm(&vals, space.feature(k).len(), beta)
        })
        .sum::<f64>()
        .exp()
}

/// Focus-mixed joint feature probability of a block of (agent, recipient) pairs.
pub fn feature_joint(space: &FeatureSpace, pairs: &[(&Object, &Object)], beta: f64, gamma: f64) -> f64 {
    let agents: Vec<&Object> = pairs.iter().map(|p| p.0).collect();
    let recips: Vec<&Object> = pairs.iter().map(|p| p.1).collect();
    gamma * role_joint(space, &agents, beta) + (1.0 - gamma) * role_joint(space, &recips, beta)
}

/// Whether value `v` of the target feature satisfies the assertion, read
/// straight off the reference semantics.
pub fn holds(asr: &CausalAssertion, a: &Object, r: &Object, v: usize) -> bool {
    let k = asr.target;
    let (av, rv, v) = (a.value(k) as i64, r.value(k) as i64, v as i64);
    let base = match asr.reference {
        Reference::AgentFeature => v == av,
        Reference::RecipientFeature => v == rv,
        Reference::Absolute(x) => v == x as i64,
        Reference::AgentPlus(d) => v == av + d as i64,
        Reference::RecipientPlus(d) => v == rv + d as i64,
        Reference::GreaterThan(Role::Agent) => v > av,
        Reference::GreaterThan(Role::Recipient) => v > rv,
        Reference::LessThan(Role::Agent) => v < av,
        Reference::LessThan(Role::Recipient) => v < rv,
    };
    base != asr.negated
}

/// Brute-force outcome set of hypothesis `h` on (a, r): every object of the
/// universe with positive likelihood.
pub fn brute_domain(hyp: &HypothesisSpace, h: usize, a: &Object, r: &Object) -> Vec<Object> {
    let space = hyp.space();
    let f = hyp.function(h);
    space
        .objects()
        .filter(|o| {
            f.assertions().iter().all(|asr| holds(asr, a, r, o.value(asr.target)))
                && (0..space.len())
                    .filter(|k| f.assertions().iter().all(|asr| asr.target != *k))
                    .all(|k| o.value(k) == r.value(k))
        })
        .collect()
}

fn brute_lik(hyp: &HypothesisSpace, h: usize, d: &Observation) -> f64 {
    let dom = brute_domain(hyp, h, &d.agent, &d.recipient);
    let rp = d.result.as_ref().unwrap();
    if dom.contains(rp) {
        1.0 / dom.len() as f64
    } else {
        0.0
    }
}

/// Unnormalized function posterior over the block `members`.
fn block_function_weights(hyp: &HypothesisSpace, data: &[Observation], members: &[usize]) -> Vec<f64> {
    (0..hyp.len())
        .map(|h| hyp.priors()[h] * members.iter().map(|&i| brute_lik(hyp, h, &data[i])).product::<f64>())
        .collect()
}

/// Exact posterior over partitions, keyed by restricted growth string.
pub fn exact_partition_posterior(hyp: &HypothesisSpace, data: &[Observation], alpha: f64, beta: f64, gamma: f64) -> BTreeMap<Vec<usize>, f64> {
    let space = hyp.space();
    let mut out = BTreeMap::new();
    for labels in set_partitions(data.len()) {
        let bs = blocks(&labels);
        // CRP: α^K Π (n_k − 1)! / Π_{i<n} (α + i)
        let mut w: f64 = bs.iter().map(|b| alpha * (1..b.len()).product::<usize>() as f64).product();
        w /= (0..data.len()).map(|i| alpha + i as f64).product::<f64>();
        for b in &bs {
            let pairs: Vec<(&Object, &Object)> = b.iter().map(|&i| (&data[i].agent, &data[i].recipient)).collect();
            w *= feature_joint(space, &pairs, beta, gamma);
            w *= block_function_weights(hyp, data, b).iter().sum::<f64>();
        }
        out.insert(labels, w);
    }
    let z: f64 = out.values().sum();
    out.values_mut().for_each(|v| *v /= z);
    out
}

/// Exact posterior predictive over the full universe.
pub fn exact_predictive(hyp: &HypothesisSpace, data: &[Observation], alpha: f64, beta: f64, gamma: f64, a: &Object, r: &Object) -> Vec<f64> {
    let space = hyp.space();
    let post = exact_partition_posterior(hyp, data, alpha, beta, gamma);
    let outcome = |weights: &[f64]| {
        let z: f64 = weights.iter().sum();
        let mut dense = vec![0.0; space.object_count()];
        for (h, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let dom = brute_domain(hyp, h, a, r);
            for o in &dom {
                dense[space.index_of(o)] += w / z / dom.len() as f64;
            }
        }
        dense
    };
    let prior = outcome(hyp.priors());
    let mut dense = vec![0.0; space.object_count()];
    for (labels, p) in post {
        if p == 0.0 {
            continue;
        }
        let bs = blocks(&labels);
        let mut seats: Vec<(f64, Vec<f64>)> = bs
            .iter()
            .map(|b| {
                let mut pairs: Vec<(&Object, &Object)> = b.iter().map(|&i| (&data[i].agent, &data[i].recipient)).collect();
                let before = feature_joint(space, &pairs, beta, gamma);
                pairs.push((a, r));
                let after = feature_joint(space, &pairs, beta, gamma);
                (b.len() as f64 * after / before, outcome(&block_function_weights(hyp, data, b)))
            })
            .collect();
        seats.push((alpha * feature_joint(space, &[(a, r)], beta, gamma), prior.clone()));
        let z: f64 = seats.iter().map(|s| s.0).sum();
        for (w, dist) in seats {
            for (acc, q) in dense.iter_mut().zip(dist) {
                *acc += p * w / z * q;
            }
        }
    }
    dense
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// The oracle instance used by the Gibbs checks: four observations in which
/// two follow "result takes the agent's size" and two "result turns dark".
pub fn gibbs_instance() -> (HypothesisSpace, Vec<Observation>, Vec<(Object, Object)>) {
    let space = binary2();
    let hyp = HypothesisSpace::build(&space, &Default::default()).unwrap();
    let data = vec![
        obs(&space, "large-light", "small-light", "large-light"),
        obs(&space, "large-dark", "small-light", "large-light"),
        obs(&space, "small-dark", "large-light", "large-dark"),
        obs(&space, "small-light", "large-light", "large-dark"),
    ];
    let o = |s| space.parse_object(s).unwrap();
    let queries = vec![
        (o("large-light"), o("small-dark")),
        (o("small-dark"), o("small-light")),
        (o("large-dark"), o("large-dark")),
    ];
    (hyp, data, queries)
}
