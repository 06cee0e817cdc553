use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsl::HypothesisSpace;
use crate::error::{Error, Result};
use crate::experiments::{BehavioralRecord, Condition, RunKey};
use crate::models::{hypothesis_spaces, ConditionModel, ModelKind, ModelParams};
use crate::rng::derive_seed;

use super::response::{bic, softmax, PROB_FLOOR};

/// Axis overrides for a refinement stage; missing axes keep the coarse list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridPatch {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
}

/// Support lists for each parameter, plus an optional second stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<GridPatch>,
}

fn t_axis() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.5).collect()
}

fn beta_axis() -> Vec<f64> {
    let mut b: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    b.extend([2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0]);
    b
}

impl ParamGrid {
    /// Coarse α × β grid with γ fixed at 0.5, then a fine α pass.
    pub fn exp1() -> Self {
        let mut alpha: Vec<f64> = vec![0.01];
        alpha.extend((1..=10).map(|i| i as f64 / 10.0));
        alpha.extend([1.5, 2.0, 4.0, 8.0]);
        ParamGrid {
            alpha,
            beta: beta_axis(),
            gamma: vec![0.5],
            t: t_axis(),
            refine: Some(GridPatch {
                alpha: Some((0..=12).map(|i| 0.28 + 0.02 * i as f64).map(|x| (x * 100.0).round() / 100.0).collect()),
                ..Default::default()
            }),
        }
    }

    /// α centred on 5 with an exponential tail, β as before, five γ values.
    pub fn exp2() -> Self {
        let mut alpha: Vec<f64> = (1..=10).map(f64::from).collect();
        alpha.extend([16.0, 32.0, 64.0, 128.0, 256.0]);
        ParamGrid {
            alpha,
            beta: beta_axis(),
            gamma: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            t: t_axis(),
            refine: None,
        }
    }

    /// A grid file, or the builtin names `exp1` / `exp2`.
    pub fn load(path: &Path) -> Result<Self> {
        let g = match path.to_str() {
            Some("exp1") => Self::exp1(),
            Some("exp2") => Self::exp2(),
            _ => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))?
            }
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, msg: &str| Err(Error::InvalidParam { name, msg: msg.into() });
        if self.alpha.is_empty() || self.beta.is_empty() || self.gamma.is_empty() || self.t.is_empty() {
            return bad("grid", "every axis needs at least one value");
        }
        let all = |v: &[f64], ok: fn(f64) -> bool| v.iter().all(|&x| ok(x));
        if !all(&self.alpha, |a| a > 0.0 && a.is_finite()) {
            return bad("alpha", "grid values must be positive");
        }
        if !all(&self.beta, |b| b >= 0.0 && b.is_finite()) {
            return bad("beta", "grid values must be nonnegative");
        }
        if !all(&self.gamma, |g| (0.0..=1.0).contains(&g)) {
            return bad("gamma", "grid values must lie in [0, 1]");
        }
        if !all(&self.t, |t| t >= 0.0 && t.is_finite()) {
            return bad("t", "grid values must be nonnegative");
        }
        if let Some(p) = &self.refine {
            self.refined(p).validate()?;
        }
        Ok(())
    }

    fn refined(&self, p: &GridPatch) -> ParamGrid {
        ParamGrid {
            alpha: p.alpha.clone().unwrap_or_else(|| self.alpha.clone()),
            beta: p.beta.clone().unwrap_or_else(|| self.beta.clone()),
            gamma: p.gamma.clone().unwrap_or_else(|| self.gamma.clone()),
            t: p.t.clone().unwrap_or_else(|| self.t.clone()),
            refine: None,
        }
    }

    /// Model cells (α, β, γ) the model actually depends on. Models without
    /// category parameters get a single cell at the base values.
    fn inner_cells(&self, kind: ModelKind, base: &ModelParams) -> Vec<(f64, f64, f64)> {
        match kind {
            ModelKind::Baseline | ModelKind::Uncala => vec![(base.alpha, base.beta, base.gamma)],
            ModelKind::Locala | ModelKind::Localapro => self
                .alpha
                .iter()
                .flat_map(|&a| self.beta.iter().flat_map(move |&b| self.gamma.iter().map(move |&g| (a, b, g))))
                .collect(),
        }
    }
}

/// One row of the grid table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub stage: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t: f64,
    pub log_likelihood: f64,
}

/// Best cell with its BIC and per-record choice probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub best: CellResult,
    pub k: usize,
    pub n: usize,
    pub bic: f64,
    pub table: Vec<CellResult>,
    /// True when the budget stopped evaluation before the grid was covered.
    pub partial: bool,
    pub cells_evaluated: usize,
    pub cells_total: usize,
    /// Probability of each record's choice under the best cell, in record order.
    pub choice_probabilities: Vec<f64>,
}

/// Raw predictive rows for one model cell: per record, the candidate
/// probabilities and the chosen index.
type CellRows = Vec<(Vec<f64>, usize)>;

struct Fitter<'a> {
    kind: ModelKind,
    base: &'a ModelParams,
    records: &'a [BehavioralRecord],
    conds: BTreeMap<&'a str, (&'a Condition, Arc<HypothesisSpace>)>,
    seed: u64,
}

impl Fitter<'_> {
    fn rows(&self, cell: (f64, f64, f64)) -> Result<CellRows> {
        let params = ModelParams {
            alpha: cell.0,
            beta: cell.1,
            gamma: cell.2,
            ..self.base.clone()
        };
        let seed = derive_seed(self.seed, &[cell.0.to_bits(), cell.1.to_bits(), cell.2.to_bits()]);
        let mut runs: BTreeMap<RunKey, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            runs.entry((r.condition.clone(), r.regime, r.participant.clone())).or_default().push(i);
        }
        let mut out: Vec<Option<(Vec<f64>, usize)>> = vec![None; self.records.len()];
        let mut models: BTreeMap<&str, ConditionModel<'_>> = BTreeMap::new();
        for ((cid, _, _), idx) in &runs {
            let (cond, hyp) = &self.conds[cid.as_str()];
            if !models.contains_key(cid.as_str()) {
                models.insert(cid.as_str(), ConditionModel::new(self.kind, &params, cond, hyp, seed)?);
            }
            let seq: Vec<usize> = idx.iter().map(|&i| self.records[i].trial).collect();
            let preds = models[cid.as_str()].predictions(&seq)?;
            for (&i, p) in idx.iter().zip(preds) {
                let r = &self.records[i];
                let choice = p.outcomes.iter().position(|o| *o == r.choice).ok_or_else(|| Error::Record {
                    row: i + 2,
                    msg: format!("choice outside candidates in condition {cid}, trial {}", r.trial),
                })?;
                out[i] = Some((p.probs, choice));
            }
        }
        Ok(out.into_iter().map(|x| x.expect("every record grouped")).collect())
    }
}

fn ll_at(rows: &CellRows, t: f64, base: &ModelParams) -> f64 {
    rows.iter().map(|(p, i)| softmax(p, t, base.softmax)[*i].max(PROB_FLOOR).ln()).sum()
}

/// Exhaustive grid search. Model cells are evaluated in parallel, each on
/// streams derived from `seed` and the cell's values, so the table does not
/// depend on the thread count. At most `budget` model cells are evaluated
/// across both stages; when it runs out the result is flagged partial.
pub fn grid_search(
    kind: ModelKind,
    grid: &ParamGrid,
    base: &ModelParams,
    records: &[BehavioralRecord],
    conditions: &[Condition],
    budget: Option<usize>,
    seed: u64,
) -> Result<FitResult> {
    grid.validate()?;
    if records.is_empty() {
        return Err(Error::Record {
            row: 1,
            msg: "no records to fit".into(),
        });
    }
    let hyps = hypothesis_spaces(conditions)?;
    let fitter = Fitter {
        kind,
        base,
        records,
        conds: conditions.iter().zip(hyps).map(|(c, h)| (c.id.as_str(), (c, h))).collect(),
        seed,
    };
    for r in records {
        if !fitter.conds.contains_key(r.condition.as_str()) {
            return Err(Error::Record {
                row: 0,
                msg: format!("unknown condition `{}`", r.condition),
            });
        }
    }
    let experiment = conditions.iter().find_map(|c| c.experiment());
    let k = kind.param_count(experiment);
    let t_axis = |g: &ParamGrid| if kind == ModelKind::Baseline { vec![0.0] } else { g.t.clone() };

    let mut stages = vec![grid.clone()];
    let coarse_total = grid.inner_cells(kind, base).len();
    let refine_total = grid.refine.as_ref().filter(|_| coarse_total > 1).map_or(0, |p| grid.refined(p).inner_cells(kind, base).len());
    let cells_total = coarse_total + refine_total;
    let mut remaining = budget.unwrap_or(usize::MAX);
    let mut table = Vec::new();
    let mut evaluated = 0;
    let mut best_rows: Option<(CellResult, CellRows)> = None;
    let mut stage = 0;
    while stage < stages.len() {
        let g = stages[stage].clone();
        let mut cells = g.inner_cells(kind, base);
        cells.truncate(remaining);
        remaining -= cells.len();
        evaluated += cells.len();
        let ts = t_axis(&g);
        let results: Vec<Result<(Vec<CellResult>, CellRows)>> = cells
            .par_iter()
            .map(|&cell| {
                let rows = fitter.rows(cell)?;
                let out = ts
                    .iter()
                    .map(|&t| CellResult {
                        stage: stage + 1,
                        alpha: cell.0,
                        beta: cell.1,
                        gamma: cell.2,
                        t,
                        log_likelihood: ll_at(&rows, t, base),
                    })
                    .collect();
                Ok((out, rows))
            })
            .collect();
        for res in results {
            let (cells, rows) = res?;
            let local = cells.iter().copied().fold(None, |b: Option<CellResult>, c| match b {
                Some(b) if b.log_likelihood >= c.log_likelihood => Some(b),
                _ => Some(c),
            });
            if let Some(local) = local {
                if best_rows.as_ref().is_none_or(|(b, _)| local.log_likelihood > b.log_likelihood) {
                    best_rows = Some((local, rows));
                }
            }
            table.extend(cells);
        }
        if stage == 0 && coarse_total > 1 {
            if let Some(p) = &grid.refine {
                stages.push(grid.refined(p));
            }
        }
        stage += 1;
    }
    let (best, rows) = best_rows.ok_or(Error::BudgetExhausted {
        evaluated: 0,
        total: cells_total,
    })?;
    let choice_probabilities = rows.iter().map(|(p, i)| softmax(p, best.t, base.softmax)[*i]).collect();
    Ok(FitResult {
        model: kind,
        best,
        k,
        n: records.len(),
        bic: bic(best.log_likelihood, k, records.len()),
        table,
        partial: evaluated < cells_total,
        cells_evaluated: evaluated,
        cells_total,
        choice_probabilities,
    })
}

/// One row per grid cell: `stage,alpha,beta,gamma,t,log_likelihood`.
pub fn write_table_csv<W: Write>(fit: &FitResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stage", "alpha", "beta", "gamma", "t", "log_likelihood"])?;
    for c in &fit.table {
        w.write_record([
            c.stage.to_string(),
            c.alpha.to_string(),
            c.beta.to_string(),
            c.gamma.to_string(),
            c.t.to_string(),
            c.log_likelihood.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
