//! Sample causal laws from the grammar and compare with the enumerated prior.
//!
//! Run: cargo run --release --example grammar_prior

use std::collections::BTreeMap;

use causal_laws::dsl::{enumerate_functions, prior_probability, sample_function, FeatureSpace, GrammarConfig};
use causal_laws::rng::stream;

fn main() -> causal_laws::Result<()> {
    let space = FeatureSpace::exp1();
    let grammar = GrammarConfig::default();
    let listed = enumerate_functions(&space, &grammar)?;
    let total: f64 = listed.iter().map(|(_, p)| p).sum();
    println!("{} functions, total prior mass {total:.12}", listed.len());

    let mut rng = stream(1, &[]);
    let draws = 100_000;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..draws {
        *counts.entry(sample_function(&space, &grammar, &mut rng).to_text(&space)).or_default() += 1;
    }
    println!("{:<48} {:>9} {:>9}", "function", "prior", "sampled");
    for (f, p) in listed.iter().take(12) {
        let text = f.to_text(&space);
        let freq = counts.get(&text).copied().unwrap_or(0) as f64 / draws as f64;
        println!("{text:<48} {p:>9.5} {freq:>9.5}");
    }

    let f = causal_laws::dsl::CausalFunction::parse("color(rp)<-color(a)", &space)?;
    println!("P({}) = {}", f.to_text(&space), prior_probability(&f, &space, &grammar)?);
    Ok(())
}
