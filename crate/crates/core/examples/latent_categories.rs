//! Joint inference of causal categories and their laws by Gibbs sampling.
//!
//! Run: cargo run --release --example latent_categories [condition] [alpha] [beta] [gamma]

use std::collections::BTreeMap;

use causal_laws::categories::Hyperparams;
use causal_laws::dsl::HypothesisSpace;
use causal_laws::experiments::builtin_condition;
use causal_laws::infer::{gibbs_sample, posterior_predictive, GibbsConfig};

fn main() -> causal_laws::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let id = args.get(1).map_or("B1", String::as_str);
    let num = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let hyper = Hyperparams::new(num(2, 9.0), num(3, 1.0), num(4, 0.5))?;
    let cond = builtin_condition(id).expect("builtin condition id");
    let hyp = HypothesisSpace::build(cond.feature_space(), &cond.space.grammar())?;
    let space = hyp.space();

    let samples = gibbs_sample(&cond.learning, &hyper, &GibbsConfig::default(), &hyp)?;
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut laws: BTreeMap<String, usize> = BTreeMap::new();
    for s in &samples {
        *sizes.entry(s.num_categories()).or_default() += 1;
        if s.num_categories() == 1 {
            let h = *s.hypotheses.values().next().unwrap();
            *laws.entry(hyp.function(h).to_text(space)).or_default() += 1;
        }
    }
    println!("{} posterior samples", samples.len());
    for (k, n) in &sizes {
        println!("  {k} categories: {:.3}", *n as f64 / samples.len() as f64);
    }
    let mut laws: Vec<_> = laws.into_iter().collect();
    laws.sort_by_key(|l| std::cmp::Reverse(l.1));
    println!("most frequent laws when all evidence shares one category:");
    for (f, n) in laws.iter().take(5) {
        println!("  {:.3}  {f}", *n as f64 / samples.len() as f64);
    }

    let task = &cond.tasks[0];
    let pred = posterior_predictive(&samples, &hyp, &hyper, &task.agent, &task.recipient, Some(&task.candidates));
    let mut top: Vec<_> = pred.outcomes.iter().zip(&pred.probs).collect();
    top.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("task 1 ({} on {}):", space.display(&task.agent), space.display(&task.recipient));
    for (o, p) in top.iter().take(4) {
        println!("  {} {p:.3}", space.display(o));
    }
    Ok(())
}
