use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::dsl::{CausalFunction, FeatureSpace, HypothesisSpace, Object, Observation};
use crate::error::{Error, Result};
use crate::fit::softmax;
use crate::models::{ConditionModel, ModelKind, ModelParams};
use crate::rng::stream;

use super::{BehavioralRecord, Condition, Regime};

/// Synthetic participants answering every scored task of `cond`. Each draws
/// a presentation order and then one choice per task from the model's
/// softmaxed predictive. Records come out per participant, in presentation
/// order.
pub fn simulate_participants(
    kind: ModelKind,
    params: &ModelParams,
    cond: &Condition,
    hyp: &HypothesisSpace,
    regime: Regime,
    n: usize,
    seed: u64,
) -> Result<Vec<BehavioralRecord>> {
    let model = ConditionModel::new(kind, params, cond, hyp, seed)?;
    let people: Vec<Vec<BehavioralRecord>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut order_rng = stream(seed, &[p as u64, 0]);
            let sequence: Vec<usize> = cond
                .sequence_tasks(regime, &mut order_rng)?
                .into_iter()
                .filter(|&id| cond.tasks[id - 1].scored)
                .collect();
            let preds = model.predictions(&sequence)?;
            let mut rng = stream(seed, &[p as u64, 1]);
            sequence
                .iter()
                .zip(&preds)
                .map(|(&id, pred)| {
                    let probs = softmax(&pred.probs, params.t, params.softmax);
                    let pick = WeightedIndex::new(&probs).map_err(|e| Error::InvalidParam {
                        name: "t",
                        msg: format!("response distribution unusable: {e}"),
                    })?;
                    let task = &cond.tasks[id - 1];
                    Ok(BehavioralRecord {
                        participant: format!("{}-{}-{}", cond.id, regime.name(), p + 1),
                        condition: cond.id.clone(),
                        regime,
                        trial: id,
                        agent: task.agent.clone(),
                        recipient: task.recipient.clone(),
                        choice: pred.outcomes[pick.sample(&mut rng)].clone(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(people.into_iter().flatten().collect())
}

/// Which role stays constant across learning observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceBalance {
    FixedAgent,
    FixedRecipient,
}

impl EvidenceBalance {
    pub fn name(self) -> &'static str {
        match self {
            EvidenceBalance::FixedAgent => "fixed-agent",
            EvidenceBalance::FixedRecipient => "fixed-recipient",
        }
    }
}

/// `count` learning observations generated by a deterministic `rule`: one
/// object drawn uniformly is held fixed in the `balance` role, the other
/// role takes distinct objects whose result stays inside the space.
pub fn simulate_rule_learning<R: Rng + ?Sized>(
    rule: &CausalFunction,
    balance: EvidenceBalance,
    count: usize,
    space: &FeatureSpace,
    rng: &mut R,
) -> Result<Vec<Observation>> {
    let pair = |fixed: &Object, other: &Object| match balance {
        EvidenceBalance::FixedAgent => (fixed.clone(), other.clone()),
        EvidenceBalance::FixedRecipient => (other.clone(), fixed.clone()),
    };
    let partners = |fixed: &Object| -> Vec<Observation> {
        space
            .objects()
            .filter_map(|o| {
                let (a, r) = pair(fixed, &o);
                let dom = rule.apply(&a, &r, space);
                (dom.size() == 1).then(|| Observation::new(a, r, dom.objects().remove(0)))
            })
            .collect()
    };
    let fixed: Vec<Object> = space.objects().filter(|f| partners(f).len() >= count).collect();
    let anchor = fixed.choose(rng).ok_or_else(|| Error::InvalidParam {
        name: "count",
        msg: format!("no object admits {count} in-range {} observations", balance.name()),
    })?;
    let mut obs = partners(anchor);
    obs.shuffle(rng);
    obs.truncate(count);
    Ok(obs)
}
