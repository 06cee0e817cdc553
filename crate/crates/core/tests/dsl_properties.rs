mod common;

use causal_laws::dsl::{enumerate_functions, sample_function, FeatureSpace, GrammarConfig, HypothesisSpace, Object, Observation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::brute_domain;

fn spaces() -> Vec<(FeatureSpace, GrammarConfig)> {
    vec![
        (FeatureSpace::exp1(), GrammarConfig::default()),
        (FeatureSpace::exp2(), GrammarConfig::extended()),
        (common::binary2(), GrammarConfig::default()),
    ]
}

fn random_object<R: Rng>(space: &FeatureSpace, rng: &mut R) -> Object {
    space.object_at(rng.random_range(0..space.object_count()))
}

#[test]
fn likelihood_matches_brute_force_domain_on_200_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (space, grammar) in spaces() {
        let hyp = HypothesisSpace::build(&space, &grammar).unwrap();
        for _ in 0..200 {
            let f = sample_function(&space, &grammar, &mut rng);
            let h = hyp.index_of(&f).expect("sampled functions are enumerated");
            let (a, r) = (random_object(&space, &mut rng), random_object(&space, &mut rng));
            let dom = brute_domain(&hyp, h, &a, &r);
            // half the time pick an outcome inside the domain
            let rp = if !dom.is_empty() && rng.random_bool(0.5) {
                dom[rng.random_range(0..dom.len())].clone()
            } else {
                random_object(&space, &mut rng)
            };
            let want = if dom.contains(&rp) { 1.0 / dom.len() as f64 } else { 0.0 };
            let obs = Observation::new(a, r, rp);
            assert_eq!(f.likelihood(&obs, &space, 0.0), want, "{}", f.to_text(&space));
        }
    }
}

#[test]
fn sampler_passes_chi_square_against_enumeration() {
    let space = FeatureSpace::exp1();
    let grammar = GrammarConfig::default();
    let hyp = HypothesisSpace::build(&space, &grammar).unwrap();
    let draws = 100_000;
    let mut counts = vec![0usize; hyp.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..draws {
        counts[hyp.index_of(&sample_function(&space, &grammar, &mut rng)).unwrap()] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(hyp.priors())
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new((hyp.len() - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

#[test]
fn geometric_tail_by_conjunct_count() {
    for (space, grammar) in spaces() {
        let listed = enumerate_functions(&space, &grammar).unwrap();
        let total: f64 = listed.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for k in 1..space.len() {
            let mass: f64 = listed.iter().filter(|(f, _)| f.len() == k).map(|(_, p)| p).sum();
            assert!((mass - 0.5f64.powi(k as i32)).abs() < 1e-9, "k={k}: {mass}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcomes_keep_unasserted_recipient_features(seed in any::<u64>(), which in 0usize..3) {
        let (space, grammar) = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = sample_function(space, grammar, &mut rng);
        let (a, r) = (random_object(space, &mut rng), random_object(space, &mut rng));
        let asserted: Vec<usize> = f.assertions().iter().map(|x| x.target).collect();
        for o in f.apply(&a, &r, space).objects() {
            for k in (0..space.len()).filter(|k| !asserted.contains(k)) {
                prop_assert_eq!(o.value(k), r.value(k));
            }
        }
    }

    #[test]
    fn deterministic_laws_beat_any_ambiguous_outcome(seed in any::<u64>(), which in 0usize..3) {
        let (space, grammar) = &spaces()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, r) = (random_object(space, &mut rng), random_object(space, &mut rng));
        let fs: Vec<_> = (0..12).map(|_| sample_function(space, grammar, &mut rng)).collect();
        let single: Vec<_> = fs.iter().filter(|f| f.apply(&a, &r, space).size() == 1).collect();
        let multi: Vec<_> = fs.iter().filter(|f| f.apply(&a, &r, space).size() > 1).collect();
        for f in &single {
            let o = f.apply(&a, &r, space).objects().remove(0);
            let top = f.hard_likelihood(&a, &r, &o, space);
            for g in &multi {
                for o2 in g.apply(&a, &r, space).objects() {
                    prop_assert!(top > g.hard_likelihood(&a, &r, &o2, space));
                }
            }
        }
    }

    #[test]
    fn posterior_is_normalized_and_filters_inconsistent_laws(seed in any::<u64>(), n in 1usize..4) {
        let space = FeatureSpace::exp1();
        let hyp = HypothesisSpace::build(&space, &GrammarConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Observation> = (0..n)
            .map(|_| Observation::new(random_object(&space, &mut rng), random_object(&space, &mut rng), random_object(&space, &mut rng)))
            .collect();
        if let Ok(post) = hyp.posterior(&data) {
            prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (h, p) in post.iter().enumerate() {
                let consistent = data.iter().all(|d| hyp.function(h).likelihood(d, &space, 0.0) > 0.0);
                prop_assert!(consistent || *p == 0.0);
            }
        }
    }
}
