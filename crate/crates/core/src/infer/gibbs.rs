use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::categories::{CategoryState, Hyperparams, Partition, Seat};
use crate::dsl::{HypothesisSpace, Observation};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Sampling schedule for the collapsed Gibbs sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            chains: 5,
            sweeps: 2000,
            burn_in: 200,
            thin: 1,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, msg: &str| Err(Error::InvalidParam { name, msg: msg.into() });
        if self.chains == 0 {
            return bad("chains", "need at least one chain");
        }
        if self.thin == 0 {
            return bad("thin", "must be at least 1");
        }
        if self.burn_in >= self.sweeps {
            return bad("burn_in", "must be smaller than sweeps");
        }
        Ok(())
    }

    pub fn samples_per_chain(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thin)
    }
}

/// One retained state: the partition (with each category's function set)
/// and the hypothesis index behind each category's function.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub partition: Partition,
    pub hypotheses: BTreeMap<usize, usize>,
}

impl PosteriorSample {
    pub fn num_categories(&self) -> usize {
        self.partition.num_categories()
    }
}

/// Collapsed Gibbs over partitions with per-category functions. Chains run
/// in parallel on streams derived from `(cfg.seed, chain)`; the returned
/// samples are concatenated in chain order.
pub fn gibbs_sample(data: &[Observation], hyper: &Hyperparams, cfg: &GibbsConfig, hyp: &HypothesisSpace) -> Result<Vec<PosteriorSample>> {
    hyper.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidParam {
            name: "data",
            msg: "Gibbs sampling needs at least one observation".into(),
        });
    }
    if let Some(i) = data.iter().position(|d| d.result.is_none()) {
        return Err(Error::InvalidParam {
            name: "data",
            msg: format!("observation {i} has no result"),
        });
    }
    let lik: Vec<Vec<f64>> = data.iter().map(|d| hyp.likelihoods(d)).collect();
    let chains: Result<Vec<Vec<PosteriorSample>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| Chain::new(data, &lik, hyp, hyper).run(cfg, &mut stream(cfg.seed, &[c as u64])))
        .collect();
    Ok(chains?.into_iter().flatten().collect())
}

struct Chain<'a> {
    data: &'a [Observation],
    lik: &'a [Vec<f64>],
    hyp: &'a HypothesisSpace,
    hyper: &'a Hyperparams,
    marginal: Vec<f64>,
    new_feature: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(data: &'a [Observation], lik: &'a [Vec<f64>], hyp: &'a HypothesisSpace, hyper: &'a Hyperparams) -> Self {
        let marginal = lik
            .iter()
            .map(|row| row.iter().zip(hyp.priors()).map(|(l, p)| l * p).sum())
            .collect();
        let empty = CategoryState::new(hyp.space());
        let new_feature = data
            .iter()
            .map(|d| empty.joint_feature_likelihood(&d.agent, &d.recipient, hyper))
            .collect();
        Chain {
            data,
            lik,
            hyp,
            hyper,
            marginal,
            new_feature,
        }
    }

    fn draw_function<R: Rng + ?Sized>(&self, members: &[usize], rng: &mut R) -> Result<usize> {
        let rows: Vec<&[f64]> = members.iter().map(|&m| self.lik[m].as_slice()).collect();
        let post = self
            .hyp
            .posterior_from_rows(&rows)
            .ok_or_else(|| Error::NoConsistentFunction { members: members.to_vec() })?;
        Ok(HypothesisSpace::sample_weighted(&post, rng).expect("posterior has mass"))
    }

    fn run<R: Rng + ?Sized>(&self, cfg: &GibbsConfig, rng: &mut R) -> Result<Vec<PosteriorSample>> {
        let n = self.data.len();
        let space = self.hyp.space();
        let mut part = Partition::new(n);
        let mut funcs: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, d) in self.data.iter().enumerate() {
            let id = part.assign(i, Seat::New, &d.agent, &d.recipient, space);
            funcs.insert(id, self.draw_function(&[i], rng)?);
        }
        let mut out = Vec::with_capacity(cfg.samples_per_chain());
        let mut order: Vec<usize> = (0..n).collect();
        for sweep in 0..cfg.sweeps {
            order.shuffle(rng);
            for &i in &order {
                let d = &self.data[i];
                let left = part.unassign(i, &d.agent, &d.recipient);
                let mut seats: Vec<(Seat, f64)> = part
                    .categories()
                    .iter()
                    .map(|(&id, c)| {
                        let w = c.size() as f64
                            * c.joint_feature_likelihood(&d.agent, &d.recipient, self.hyper)
                            * self.lik[i][funcs[&id]];
                        (Seat::Existing(id), w)
                    })
                    .collect();
                seats.push((Seat::New, self.hyper.alpha * self.new_feature[i] * self.marginal[i]));
                let weights: Vec<f64> = seats.iter().map(|s| s.1).collect();
                let pick = HypothesisSpace::sample_weighted(&weights, rng)
                    .ok_or_else(|| Error::NoConsistentFunction { members: vec![i] })?;
                let id = part.assign(i, seats[pick].0, &d.agent, &d.recipient, space);
                let members = part.category(id).expect("just seated").members().to_vec();
                funcs.insert(id, self.draw_function(&members, rng)?);
                match left {
                    Some(old) if old != id => match part.category(old) {
                        Some(c) => {
                            let members = c.members().to_vec();
                            funcs.insert(old, self.draw_function(&members, rng)?);
                        }
                        None => {
                            funcs.remove(&old);
                        }
                    },
                    _ => {}
                }
            }
            let ids: Vec<(usize, Vec<usize>)> = part
                .categories()
                .iter()
                .map(|(&id, c)| (id, c.members().to_vec()))
                .collect();
            for (id, members) in ids {
                funcs.insert(id, self.draw_function(&members, rng)?);
            }
            if sweep >= cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.thin) {
                let mut partition = part.clone();
                for (&id, &h) in &funcs {
                    partition.category_mut(id).expect("function per category").function = Some(self.hyp.function(h).clone());
                }
                out.push(PosteriorSample {
                    partition,
                    hypotheses: funcs.clone(),
                });
            }
        }
        Ok(out)
    }
}

/// Long-format dump: one row per (sample, observation) with the block label
/// (renumbered by first appearance) and the block's function.
pub fn write_samples_csv<W: Write>(samples: &[PosteriorSample], hyp: &HypothesisSpace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "observation", "category", "function"])?;
    for (s, sample) in samples.iter().enumerate() {
        let labels = sample.partition.canonical_labels();
        for (i, label) in labels.iter().enumerate() {
            let Some(label) = label else { continue };
            let id = sample.partition.category_of(i).expect("seated");
            let f = hyp.function(sample.hypotheses[&id]).to_text(hyp.space());
            w.write_record([s.to_string(), i.to_string(), label.to_string(), f])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{FeatureSpace, GrammarConfig};

    #[test]
    fn one_observation_one_category() {
        let space = FeatureSpace::exp1();
        let hyp = HypothesisSpace::build(&space, &GrammarConfig::default()).unwrap();
        let o = |s| space.parse_object(s).unwrap();
        let d = [Observation::new(o("red-square"), o("yellow-circle"), o("red-circle"))];
        let cfg = GibbsConfig {
            chains: 2,
            sweeps: 50,
            burn_in: 10,
            thin: 3,
            seed: 1,
        };
        let s = gibbs_sample(&d, &Hyperparams::new(1.0, 1.0, 0.5).unwrap(), &cfg, &hyp).unwrap();
        assert_eq!(s.len(), 2 * cfg.samples_per_chain());
        assert!(s.iter().all(|x| x.num_categories() == 1));
        assert!(s.iter().all(|x| hyp.function(x.hypotheses[&x.partition.category_of(0).unwrap()]).likelihood(&d[0], &space, 0.0) > 0.0));
    }

    #[test]
    fn schedule_validation() {
        let bad = GibbsConfig {
            burn_in: 10,
            sweeps: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(GibbsConfig::default().samples_per_chain(), 1800);
    }
}
