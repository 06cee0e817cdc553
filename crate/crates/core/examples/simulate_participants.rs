//! Synthetic participants for the ordinal experiment, written as a
//! behavioral-record CSV on stdout.
//!
//! Run: cargo run --release --example simulate_participants [model] [n]

use causal_laws::experiments::{builtin_conditions, simulate_participants, write_records_csv, Regime};
use causal_laws::models::{hypothesis_spaces, ModelKind, ModelParams};
use causal_laws::rng::derive_seed;

fn main() -> causal_laws::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind: ModelKind = args.get(1).map_or("uncala", String::as_str).parse()?;
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let conds = builtin_conditions(2);
    let hyps = hypothesis_spaces(&conds)?;
    let params = ModelParams {
        alpha: 9.0,
        gamma: 1.0,
        t: 7.0,
        runs: 200,
        ..ModelParams::default()
    };
    let mut records = Vec::new();
    for (i, (cond, hyp)) in conds.iter().zip(&hyps).enumerate() {
        records.extend(simulate_participants(kind, &params, cond, hyp, Regime::Random, n, derive_seed(1, &[i as u64]))?);
    }
    write_records_csv(&records, conds[0].feature_space(), std::io::stdout().lock())
}
