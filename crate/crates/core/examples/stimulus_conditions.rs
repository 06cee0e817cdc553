//! The shipped conditions: learning evidence, presentation orders and task
//! dissimilarity.
//!
//! Run: cargo run --release --example stimulus_conditions

use causal_laws::experiments::{builtin_conditions, ground_truth_rule, Regime};
use causal_laws::rng::stream;

fn main() -> causal_laws::Result<()> {
    for exp in [1, 2] {
        for cond in builtin_conditions(exp) {
            let space = cond.feature_space();
            println!("{} ({} learning, {} tasks)", cond.id, cond.learning.len(), cond.tasks.len());
            for o in &cond.learning {
                let rp = o.result.as_ref().expect("learning observations carry results");
                println!("  {} + {} -> {}", space.display(&o.agent), space.display(&o.recipient), space.display(rp));
            }
            let regime = if exp == 1 { Regime::Near } else { Regime::Random };
            let order = cond.sequence_tasks(regime, &mut stream(0, &[]))?;
            println!("  {} order: {order:?}", regime.name());
            let ds: Vec<usize> = cond.tasks.iter().map(|t| cond.dissimilarity(t)).collect();
            println!("  dissimilarity: {ds:?}");
        }
    }
    let space = causal_laws::dsl::FeatureSpace::exp2();
    for id in [1, 2] {
        println!("rule {id}: {}", ground_truth_rule(id)?.to_text(&space));
    }
    Ok(())
}
