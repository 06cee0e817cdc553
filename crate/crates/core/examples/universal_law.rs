//! One law for everything: posterior over laws from a single demonstration
//! and the resulting predictions for new pairs.
//!
//! Run: cargo run --release --example universal_law [condition]

use causal_laws::dsl::HypothesisSpace;
use causal_laws::experiments::builtin_condition;
use causal_laws::infer::{uncala_posterior, uncala_predictive};

fn main() -> causal_laws::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "A1".into());
    let cond = builtin_condition(&id).expect("builtin condition id");
    let hyp = HypothesisSpace::build(cond.feature_space(), &cond.space.grammar())?;
    let space = hyp.space();
    let post = uncala_posterior(&cond.learning, &hyp)?;

    let mut ranked: Vec<(usize, f64)> = post.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("{} laws consistent with the learning data", ranked.len());
    for (h, p) in ranked.iter().take(8) {
        println!("  {p:.4}  {}", hyp.function(*h).to_text(space));
    }

    for task in cond.tasks.iter().take(3) {
        let pred = uncala_predictive(&post, &hyp, &task.agent, &task.recipient, Some(&task.candidates));
        let (best, p) = pred.outcomes.iter().zip(&pred.probs).max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        println!(
            "task {}: {} acts on {} -> {} ({p:.3})",
            task.id,
            space.display(&task.agent),
            space.display(&task.recipient),
            space.display(best)
        );
    }
    Ok(())
}
