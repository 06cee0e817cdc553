//! The four models behind one interface: per-task predictive distributions
//! for a condition and a presentation order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::categories::Hyperparams;
use crate::dsl::HypothesisSpace;
use crate::error::{Error, Result};
use crate::experiments::Condition;
use crate::infer::{gibbs_sample, posterior_predictive, uncala_posterior, uncala_predictive, GibbsConfig, Predictive};
use crate::process::averaged_predictions;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Uniform over candidates.
    Baseline,
    /// One universal law.
    Uncala,
    /// Latent causal categories, inferred jointly.
    Locala,
    /// Latent causal categories, committed sequentially.
    Localapro,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Baseline, ModelKind::Uncala, ModelKind::Locala, ModelKind::Localapro];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Uncala => "uncala",
            ModelKind::Locala => "locala",
            ModelKind::Localapro => "localapro",
        }
    }

    /// Free parameters counted by BIC. LoCaLa fixes γ = 0.5 in the
    /// categorical experiment and fits it in the ordinal one.
    pub fn param_count(self, experiment: Option<u8>) -> usize {
        match self {
            ModelKind::Baseline => 0,
            ModelKind::Uncala => 1,
            ModelKind::Locala if experiment == Some(2) => 4,
            ModelKind::Locala | ModelKind::Localapro => 3,
        }
    }

    /// Whether predictions depend on the presentation order.
    pub fn order_dependent(self) -> bool {
        self == ModelKind::Localapro
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParam {
                name: "model",
                msg: format!("expected baseline, uncala, locala or localapro, got `{s}`"),
            })
    }
}

/// How the response rule turns predictive probabilities into choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SoftmaxMode {
    /// `P(c) ∝ exp(t · p(c))`
    #[default]
    Prob,
    /// `P(c) ∝ exp(t · ln p(c))`
    Log,
}

/// Model and response-rule settings, parsed from `k=v` lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t: f64,
    pub softmax: SoftmaxMode,
    /// Simulated learners averaged by the process model.
    pub runs: usize,
    pub gibbs: GibbsConfig,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.5,
            t: 7.0,
            softmax: SoftmaxMode::Prob,
            runs: 1000,
            gibbs: GibbsConfig::default(),
        }
    }
}

impl ModelParams {
    pub fn hyper(&self) -> Result<Hyperparams> {
        Hyperparams::new(self.alpha, self.beta, self.gamma)
    }

    /// Apply `key=value` pairs separated by commas, e.g. `alpha=0.38,t=7`.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::InvalidParam {
                name: "params",
                msg: format!("expected key=value, got `{item}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            let num = |name: &'static str| {
                v.parse::<f64>().map_err(|_| Error::InvalidParam {
                    name,
                    msg: format!("`{v}` is not a number"),
                })
            };
            let count = |name: &'static str| {
                v.parse::<usize>().map_err(|_| Error::InvalidParam {
                    name,
                    msg: format!("`{v}` is not a count"),
                })
            };
            match k {
                "alpha" => self.alpha = num("alpha")?,
                "beta" => self.beta = num("beta")?,
                "gamma" => self.gamma = num("gamma")?,
                "t" => self.t = num("t")?,
                "runs" => self.runs = count("runs")?,
                "chains" => self.gibbs.chains = count("chains")?,
                "sweeps" => self.gibbs.sweeps = count("sweeps")?,
                "burn_in" => self.gibbs.burn_in = count("burn_in")?,
                "thin" => self.gibbs.thin = count("thin")?,
                "softmax" => {
                    self.softmax = match v {
                        "prob" => SoftmaxMode::Prob,
                        "log" => SoftmaxMode::Log,
                        _ => {
                            return Err(Error::InvalidParam {
                                name: "softmax",
                                msg: format!("expected prob or log, got `{v}`"),
                            })
                        }
                    }
                }
                other => {
                    return Err(Error::InvalidParam {
                        name: "params",
                        msg: format!("unknown parameter `{other}`"),
                    })
                }
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper()?;
        self.gibbs.validate()?;
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParam {
                name: "t",
                msg: format!("must be nonnegative and finite, got {}", self.t),
            });
        }
        if self.runs == 0 {
            return Err(Error::InvalidParam {
                name: "runs",
                msg: "need at least one run".into(),
            });
        }
        Ok(())
    }
}

/// Stable 64-bit key of a string, used to derive per-condition streams.
pub fn text_key(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Build one hypothesis space per distinct feature space, shared by every
/// condition that uses it. The result is aligned with `conditions`.
pub fn hypothesis_spaces(conditions: &[Condition]) -> Result<Vec<Arc<HypothesisSpace>>> {
    let mut cache: BTreeMap<String, Arc<HypothesisSpace>> = BTreeMap::new();
    conditions
        .iter()
        .map(|c| {
            let key = serde_json::to_string(&c.space)?;
            if let Some(h) = cache.get(&key) {
                return Ok(h.clone());
            }
            let h = Arc::new(HypothesisSpace::build(c.feature_space(), &c.space.grammar())?);
            cache.insert(key, h.clone());
            Ok(h)
        })
        .collect()
}

/// A model conditioned on one condition's learning data.
pub struct ConditionModel<'a> {
    kind: ModelKind,
    params: ModelParams,
    cond: &'a Condition,
    hyp: &'a HypothesisSpace,
    seed: u64,
    per_task: Vec<Predictive>,
    by_sequence: Mutex<BTreeMap<Vec<usize>, Vec<Predictive>>>,
}

impl<'a> ConditionModel<'a> {
    /// Runs the inference that does not depend on presentation order.
    pub fn new(kind: ModelKind, params: &ModelParams, cond: &'a Condition, hyp: &'a HypothesisSpace, seed: u64) -> Result<Self> {
        params.validate()?;
        let seed = derive_seed(seed, &[text_key(&cond.id)]);
        let tasks = &cond.tasks;
        let per_task = match kind {
            ModelKind::Baseline => tasks.iter().map(|t| Predictive::uniform(&t.agent, &t.recipient, &t.candidates)).collect(),
            ModelKind::Uncala => {
                let post = uncala_posterior(&cond.learning, hyp)?;
                tasks
                    .iter()
                    .map(|t| uncala_predictive(&post, hyp, &t.agent, &t.recipient, Some(&t.candidates)))
                    .collect()
            }
            ModelKind::Locala => {
                let hyper = params.hyper()?;
                let cfg = GibbsConfig { seed, ..params.gibbs.clone() };
                let samples = gibbs_sample(&cond.learning, &hyper, &cfg, hyp)?;
                tasks
                    .iter()
                    .map(|t| posterior_predictive(&samples, hyp, &hyper, &t.agent, &t.recipient, Some(&t.candidates)))
                    .collect()
            }
            ModelKind::Localapro => Vec::new(),
        };
        Ok(ConditionModel {
            kind,
            params: params.clone(),
            cond,
            hyp,
            seed,
            per_task,
            by_sequence: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Predictive per presented task; `sequence` holds 1-based task ids in
    /// presentation order.
    pub fn predictions(&self, sequence: &[usize]) -> Result<Vec<Predictive>> {
        for &id in sequence {
            if self.cond.task(id).is_none() {
                return Err(Error::InvalidParam {
                    name: "sequence",
                    msg: format!("condition {} has no task {id}", self.cond.id),
                });
            }
        }
        if self.kind != ModelKind::Localapro {
            return Ok(sequence.iter().map(|&id| self.per_task[id - 1].clone()).collect());
        }
        if let Some(hit) = self.by_sequence.lock().expect("cache lock").get(sequence) {
            return Ok(hit.clone());
        }
        let queries: Vec<_> = sequence.iter().map(|&id| self.cond.tasks[id - 1].query()).collect();
        let path: Vec<u64> = sequence.iter().map(|&id| id as u64).collect();
        let preds = averaged_predictions(
            &self.cond.learning,
            &queries,
            &self.params.hyper()?,
            self.hyp,
            self.params.runs,
            derive_seed(self.seed, &path),
        )?;
        self.by_sequence.lock().expect("cache lock").insert(sequence.to_vec(), preds.clone());
        Ok(preds)
    }
}
