//! Agent-focused categorization splits evidence with varied agents more
//! readily than evidence with one fixed agent.
//!
//! Run: cargo run --release --example causal_asymmetry [replications] [beta]

use causal_laws::categories::Hyperparams;
use causal_laws::dsl::{FeatureSpace, GrammarConfig, HypothesisSpace, Observation};
use causal_laws::experiments::{ground_truth_rule, simulate_rule_learning, EvidenceBalance};
use causal_laws::infer::{gibbs_sample, GibbsConfig};
use causal_laws::rng::{derive_seed, stream};

fn mean_categories(data: &[Observation], hyper: &Hyperparams, hyp: &HypothesisSpace, seed: u64) -> causal_laws::Result<f64> {
    let cfg = GibbsConfig { seed, ..GibbsConfig::default() };
    let samples = gibbs_sample(data, hyper, &cfg, hyp)?;
    Ok(samples.iter().map(|s| s.num_categories() as f64).sum::<f64>() / samples.len() as f64)
}

fn main() -> causal_laws::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let reps: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let beta: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let space = FeatureSpace::exp2();
    let hyp = HypothesisSpace::build(&space, &GrammarConfig::extended())?;
    let rule = ground_truth_rule(1)?;
    let hyper = Hyperparams::new(9.0, beta, 1.0)?;

    let mut wins = 0;
    for rep in 0..reps {
        let mut rng = stream(11, &[rep]);
        let fa = simulate_rule_learning(&rule, EvidenceBalance::FixedAgent, 6, &space, &mut rng)?;
        let fr = simulate_rule_learning(&rule, EvidenceBalance::FixedRecipient, 6, &space, &mut rng)?;
        let ka = mean_categories(&fa, &hyper, &hyp, derive_seed(12, &[rep, 0]))?;
        let kr = mean_categories(&fr, &hyper, &hyp, derive_seed(12, &[rep, 1]))?;
        wins += usize::from(ka < kr);
        println!("replication {rep:>2}: fixed-agent {ka:.3}  fixed-recipient {kr:.3}");
    }
    println!("fixed-agent smaller in {wins}/{reps} replications");
    Ok(())
}
