//! Cronbach's alpha of simulated choices: sharp responders agree, uniform
//! responders do not.
//!
//! Run: cargo run --release --example consistency

use causal_laws::experiments::{builtin_conditions, simulate_participants, Regime};
use causal_laws::fit::consistency;
use causal_laws::models::{hypothesis_spaces, ModelKind, ModelParams};

fn main() -> causal_laws::Result<()> {
    let conds = builtin_conditions(1);
    let hyps = hypothesis_spaces(&conds)?;
    for t in [0.0, 3.0, 7.0, 20.0] {
        let params = ModelParams { t, ..ModelParams::default() };
        let mut records = Vec::new();
        for (cond, hyp) in conds.iter().zip(&hyps) {
            records.extend(simulate_participants(ModelKind::Uncala, &params, cond, hyp, Regime::Near, 10, 3)?);
        }
        let report = consistency(&records, &conds)?;
        let pooled: Vec<f64> = report.cells.iter().filter_map(|c| c.pooled).collect();
        let trial: Vec<f64> = report.trials.iter().filter_map(|c| c.alpha).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("t={t:>4}: per-trial alpha {:.3}, pooled alpha {:.3}", mean(&trial), mean(&pooled));
    }
    Ok(())
}
