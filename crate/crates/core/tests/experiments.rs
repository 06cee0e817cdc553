use std::collections::{BTreeMap, BTreeSet};

use causal_laws::dsl::HypothesisSpace;
use causal_laws::experiments::{
    builtin_condition, builtin_conditions, group_runs, read_records_csv, simulate_participants, write_records_csv, BehavioralRecord, Regime,
};
use causal_laws::models::{hypothesis_spaces, ConditionModel, ModelKind, ModelParams};
use causal_laws::Error;

fn simulate(exp: u8, kind: ModelKind, params: &ModelParams, n: usize) -> Vec<BehavioralRecord> {
    let conds = builtin_conditions(exp);
    let hyps = hypothesis_spaces(&conds).unwrap();
    let regimes = if exp == 1 { vec![Regime::Near, Regime::Far] } else { vec![Regime::Random] };
    let mut out = Vec::new();
    for (i, (c, h)) in conds.iter().zip(&hyps).enumerate() {
        for (j, &r) in regimes.iter().enumerate() {
            out.extend(simulate_participants(kind, params, c, h, r, n, (i * 10 + j) as u64).unwrap());
        }
    }
    out
}

#[test]
fn stimulus_invariants() {
    for c in builtin_conditions(1) {
        assert_eq!(c.learning.len(), 1);
        assert_eq!(c.tasks.len(), 15);
        assert!(c.tasks.iter().all(|t| t.candidates.len() == 9 && t.scored));
    }
    for c in builtin_conditions(2) {
        assert_eq!(c.learning.len(), 6);
        assert_eq!(c.scored_tasks().count(), 16);
        assert!(c.tasks.iter().all(|t| t.candidates.len() == 20));
        let agents: BTreeSet<_> = c.learning.iter().map(|o| &o.agent).collect();
        let recips: BTreeSet<_> = c.learning.iter().map(|o| &o.recipient).collect();
        match c.meta.evidence_balance.as_deref() {
            Some("fixed-agent") => assert_eq!(agents.len(), 1),
            Some("fixed-recipient") => assert_eq!(recips.len(), 1),
            other => panic!("{}: unexpected balance {other:?}", c.id),
        }
        for t in c.scored_tasks() {
            assert!((0..=3).contains(&c.dissimilarity(t)));
        }
    }
}

#[test]
fn record_counts_follow_the_design() {
    let params = ModelParams::default();
    assert_eq!(simulate(1, ModelKind::Uncala, &params, 10).len(), 1800);
    let exp2 = simulate(2, ModelKind::Baseline, &params, 10);
    assert_eq!(exp2.len(), 4 * 160);
    for run in group_runs(&exp2).values() {
        assert_eq!(run.len(), 16);
    }
}

#[test]
fn sharp_responders_agree_and_flat_responders_are_uniform() {
    let cond = builtin_condition("A1").unwrap();
    let hyp = HypothesisSpace::build(cond.feature_space(), &cond.space.grammar()).unwrap();
    let sharp = ModelParams { t: 1e4, ..ModelParams::default() };
    let recs = simulate_participants(ModelKind::Uncala, &sharp, &cond, &hyp, Regime::Near, 25, 1).unwrap();
    let model = ConditionModel::new(ModelKind::Uncala, &sharp, &cond, &hyp, 0).unwrap();
    let preds = model.predictions(&(1..=15).collect::<Vec<_>>()).unwrap();
    let mut by_trial: BTreeMap<usize, BTreeSet<_>> = BTreeMap::new();
    for r in &recs {
        by_trial.entry(r.trial).or_default().insert(r.choice.clone());
    }
    for (t, choices) in by_trial {
        let p = &preds[t - 1].probs;
        let max = p.iter().copied().fold(0.0, f64::max);
        if p.iter().filter(|&&x| x == max).count() == 1 {
            assert_eq!(choices.len(), 1, "trial {t}");
        }
    }

    let flat = ModelParams { t: 0.0, ..ModelParams::default() };
    let recs = simulate_participants(ModelKind::Uncala, &flat, &cond, &hyp, Regime::Near, 400, 2).unwrap();
    let mut counts: BTreeMap<_, f64> = BTreeMap::new();
    for r in recs.iter().filter(|r| r.trial == 1) {
        *counts.entry(r.choice.clone()).or_default() += 1.0;
    }
    let expected = 400.0 / 9.0;
    let chi2: f64 = cond.tasks[0].candidates.iter().map(|c| (counts.get(c).unwrap_or(&0.0) - expected).powi(2) / expected).sum();
    // 8 degrees of freedom, 0.999 quantile
    assert!(chi2 < 26.12, "{chi2}");
}

#[test]
fn records_round_trip_through_csv() {
    let recs = simulate(2, ModelKind::Uncala, &ModelParams::default(), 2);
    let conds = builtin_conditions(2);
    let mut buf = Vec::new();
    write_records_csv(&recs, conds[0].feature_space(), &mut buf).unwrap();
    let back = read_records_csv(buf.as_slice(), &conds).unwrap();
    assert_eq!(back, recs);
}

#[test]
fn malformed_records_name_their_row() {
    let conds = builtin_conditions(1);
    let recs = simulate(1, ModelKind::Baseline, &ModelParams::default(), 1);
    let mut buf = Vec::new();
    write_records_csv(&recs[..3], conds[0].feature_space(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replacen("red", "purple", 2);
    match read_records_csv(text.as_bytes(), &conds) {
        Err(Error::Record { row, .. }) => assert_eq!(row, 2),
        other => panic!("{other:?}"),
    }
    assert!(read_records_csv("participant,condition,regime,trial\n".as_bytes(), &conds).is_err());
}
