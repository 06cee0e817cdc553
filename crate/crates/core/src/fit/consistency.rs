use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{BehavioralRecord, Condition, Regime};

fn sample_var(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha of a participants × items indicator matrix, with the
/// participants as the scale's components and the items as cases. A matrix
/// with zero total-score variance has alpha 1.
pub fn cronbach_alpha(matrix: &[Vec<f64>]) -> Result<f64> {
    let k = matrix.len();
    let items = matrix.first().map_or(0, Vec::len);
    if k < 2 || items < 2 || matrix.iter().any(|row| row.len() != items) {
        return Err(Error::InvalidParam {
            name: "matrix",
            msg: "need a rectangular matrix with at least 2 participants and 2 items".into(),
        });
    }
    let component: f64 = matrix.iter().map(|row| sample_var(row.iter().copied())).sum();
    let totals: Vec<f64> = (0..items).map(|j| matrix.iter().map(|row| row[j]).sum()).collect();
    let total = sample_var(totals.iter().copied());
    if total <= 1e-12 {
        return Ok(1.0);
    }
    Ok(k as f64 / (k as f64 - 1.0) * (1.0 - component / total))
}

/// One-hot rows: participant `p` chose option `choices[p][t]` on trial `t`.
pub fn indicator_matrix(choices: &[Vec<usize>], options_per_trial: &[usize]) -> Vec<Vec<f64>> {
    let offsets: Vec<usize> = options_per_trial
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let width: usize = options_per_trial.iter().sum();
    choices
        .iter()
        .map(|row| {
            let mut v = vec![0.0; width];
            for (t, &c) in row.iter().enumerate() {
                v[offsets[t] + c] = 1.0;
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrialAlpha {
    pub condition: String,
    pub regime: Regime,
    pub trial: usize,
    pub participants: usize,
    /// `None` when the cell has fewer than two participants.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CellAlpha {
    pub condition: String,
    pub regime: Regime,
    pub participants: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// Alpha over the concatenated indicators of all scored trials.
    pub pooled: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConsistencyReport {
    pub trials: Vec<TrialAlpha>,
    pub cells: Vec<CellAlpha>,
}

/// Per-trial and per-(condition, regime) consistency of recorded choices.
/// Only participants who answered every scored trial of the cell enter.
pub fn consistency(records: &[BehavioralRecord], conditions: &[Condition]) -> Result<ConsistencyReport> {
    let conds: BTreeMap<&str, &Condition> = conditions.iter().map(|c| (c.id.as_str(), c)).collect();
    // (condition, regime) -> participant -> trial -> option index
    let mut cells: BTreeMap<(String, Regime), BTreeMap<String, BTreeMap<usize, usize>>> = BTreeMap::new();
    for (row, r) in records.iter().enumerate() {
        let cond = conds.get(r.condition.as_str()).ok_or_else(|| Error::Record {
            row: row + 2,
            msg: format!("unknown condition `{}`", r.condition),
        })?;
        let task = cond.task(r.trial).ok_or_else(|| Error::Record {
            row: row + 2,
            msg: format!("no task {}", r.trial),
        })?;
        let opt = task.candidates.iter().position(|c| *c == r.choice).ok_or_else(|| Error::Record {
            row: row + 2,
            msg: "choice outside candidates".into(),
        })?;
        cells
            .entry((r.condition.clone(), r.regime))
            .or_default()
            .entry(r.participant.clone())
            .or_default()
            .insert(r.trial, opt);
    }
    let mut report = ConsistencyReport {
        trials: Vec::new(),
        cells: Vec::new(),
    };
    for ((cid, regime), people) in cells {
        let cond = conds[cid.as_str()];
        let scored: Vec<usize> = cond.scored_tasks().map(|t| t.id).collect();
        let complete: Vec<&BTreeMap<usize, usize>> = people.values().filter(|m| scored.iter().all(|t| m.contains_key(t))).collect();
        let n = complete.len();
        let mut alphas = Vec::new();
        for &t in &scored {
            let alpha = if n >= 2 {
                let choices: Vec<Vec<usize>> = complete.iter().map(|m| vec![m[&t]]).collect();
                let a = cronbach_alpha(&indicator_matrix(&choices, &[cond.tasks[t - 1].candidates.len()]))?;
                alphas.push(a);
                Some(a)
            } else {
                None
            };
            report.trials.push(TrialAlpha {
                condition: cid.clone(),
                regime,
                trial: t,
                participants: n,
                alpha,
            });
        }
        let (mean, sd, pooled) = if n >= 2 {
            let m = alphas.iter().sum::<f64>() / alphas.len() as f64;
            let sd = if alphas.len() > 1 { sample_var(alphas.iter().copied()).sqrt() } else { 0.0 };
            let choices: Vec<Vec<usize>> = complete.iter().map(|m| scored.iter().map(|t| m[t]).collect()).collect();
            let sizes: Vec<usize> = scored.iter().map(|&t| cond.tasks[t - 1].candidates.len()).collect();
            (Some(m), Some(sd), Some(cronbach_alpha(&indicator_matrix(&choices, &sizes))?))
        } else {
            (None, None, None)
        };
        report.cells.push(CellAlpha {
            condition: cid,
            regime,
            participants: n,
            mean,
            sd,
            pooled,
        });
    }
    Ok(report)
}
