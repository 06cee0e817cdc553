//! Near-first versus far-first transfer under the sequential process model.
//!
//! Run: cargo run --release --example process_order_effect [condition] [runs]

use causal_laws::categories::Hyperparams;
use causal_laws::dsl::HypothesisSpace;
use causal_laws::experiments::{builtin_condition, Regime};
use causal_laws::infer::{prior_predictive, Predictive};
use causal_laws::process::{averaged_predictions, simulate_runs};
use causal_laws::rng::stream;

fn tv(p: &Predictive, q: &Predictive) -> f64 {
    p.outcomes.iter().zip(&p.probs).map(|(o, x)| (x - q.prob_of(o)).abs()).sum::<f64>() / 2.0
}

fn main() -> causal_laws::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let id = args.get(1).map_or("A1", String::as_str);
    let runs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cond = builtin_condition(id).expect("builtin condition id");
    let hyp = HypothesisSpace::build(cond.feature_space(), &cond.space.grammar())?;

    let mut rng = stream(7, &[]);
    let near_ids = cond.sequence_tasks(Regime::Near, &mut rng)?;
    let far_ids: Vec<usize> = near_ids.iter().rev().copied().collect();
    let queries = |ids: &[usize]| ids.iter().map(|&i| cond.tasks[i - 1].query()).collect::<Vec<_>>();
    let (near, far) = (queries(&near_ids), queries(&far_ids));

    let sticky = Hyperparams::new(0.01, 0.0, 0.5)?;
    let traces = simulate_runs(&cond.learning, &near, &sticky, &hyp, runs, 1)?;
    let single = traces.iter().filter(|t| t.final_categories == 1).count();
    println!("{id}: alpha=0.01 beta=0 near-first, single-category runs {single}/{runs}");

    let pn = averaged_predictions(&cond.learning, &near, &sticky, &hyp, runs, 2)?;
    let pf = averaged_predictions(&cond.learning, &far, &sticky, &hyp, runs, 3)?;
    println!("task  TV(near, far)");
    for (k, &task) in near_ids.iter().enumerate() {
        let j = far_ids.iter().position(|&x| x == task).unwrap();
        println!("{task:>4}  {:.3}", tv(&pn[k], &pf[j]));
    }

    for alpha in [0.38, 8.0] {
        let h = Hyperparams::new(alpha, 0.0, 0.5)?;
        let preds = averaged_predictions(&cond.learning, &near, &h, &hyp, runs, 4)?;
        let mean: f64 = preds
            .iter()
            .zip(&near)
            .map(|(p, q)| tv(p, &prior_predictive(&hyp, &q.agent, &q.recipient, Some(&q.candidates))))
            .sum::<f64>()
            / preds.len() as f64;
        println!("alpha={alpha}: mean TV to the prior predictive {mean:.3}");
    }
    Ok(())
}
