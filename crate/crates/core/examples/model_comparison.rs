//! Simulate a categorical-experiment cohort from the universal-law model and
//! compare models by BIC.
//!
//! Run: cargo run --release --example model_comparison [budget]

use causal_laws::experiments::{builtin_conditions, simulate_participants, Regime};
use causal_laws::fit::{grid_search, ParamGrid};
use causal_laws::models::{hypothesis_spaces, ModelKind, ModelParams};
use causal_laws::rng::derive_seed;

fn main() -> causal_laws::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let conds = builtin_conditions(1);
    let hyps = hypothesis_spaces(&conds)?;
    let truth = ModelParams { t: 7.0, ..ModelParams::default() };
    let mut records = Vec::new();
    for (i, (cond, hyp)) in conds.iter().zip(&hyps).enumerate() {
        for (j, regime) in [Regime::Near, Regime::Far].into_iter().enumerate() {
            let seed = derive_seed(5, &[i as u64, j as u64]);
            records.extend(simulate_participants(ModelKind::Uncala, &truth, cond, hyp, regime, 10, seed)?);
        }
    }
    println!("{} simulated choices", records.len());

    let grid = ParamGrid::exp1();
    let base = ModelParams { runs: 300, ..ModelParams::default() };
    println!("{:<10} {:>10} {:>10} {:>3} {:>6} {:>6} {:>6}", "model", "LL", "BIC", "k", "t", "alpha", "beta");
    for kind in ModelKind::ALL {
        let fit = grid_search(kind, &grid, &base, &records, &conds, Some(budget), 9)?;
        let b = fit.best;
        let note = if fit.partial { " (partial grid)" } else { "" };
        println!(
            "{:<10} {:>10.2} {:>10.2} {:>3} {:>6} {:>6} {:>6}{note}",
            kind.name(),
            b.log_likelihood,
            fit.bic,
            fit.k,
            b.t,
            b.alpha,
            b.beta
        );
    }
    Ok(())
}
