use crate::dsl::Object;
use crate::error::{Error, Result};
use crate::infer::Predictive;
use crate::models::SoftmaxMode;

/// Per-choice probability floor in log likelihoods.
pub const PROB_FLOOR: f64 = 1e-10;

/// Softmax response rule over a predictive's candidates.
pub fn softmax_response(pred: &Predictive, t: f64, mode: SoftmaxMode) -> Predictive {
    Predictive {
        probs: softmax(&pred.probs, t, mode),
        ..pred.clone()
    }
}

/// `P(c) ∝ exp(t · p(c))`, or `∝ p(c)^t` in log mode.
pub fn softmax(probs: &[f64], t: f64, mode: SoftmaxMode) -> Vec<f64> {
    let scores: Vec<f64> = match mode {
        SoftmaxMode::Prob => probs.iter().map(|p| t * p).collect(),
        SoftmaxMode::Log if t == 0.0 => vec![0.0; probs.len()],
        SoftmaxMode::Log => probs.iter().map(|p| t * p.ln()).collect(),
    };
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / probs.len() as f64; probs.len()];
    }
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// `Σ ln max(P(choice), floor)` over (choice distribution, choice) pairs.
pub fn log_likelihood<'a>(pairs: impl IntoIterator<Item = (&'a Predictive, &'a Object)>) -> Result<f64> {
    let mut ll = 0.0;
    for (i, (pred, choice)) in pairs.into_iter().enumerate() {
        let idx = pred.outcomes.iter().position(|o| o == choice).ok_or_else(|| Error::Record {
            row: i + 1,
            msg: "choice has no prediction".into(),
        })?;
        ll += pred.probs[idx].max(PROB_FLOOR).ln();
    }
    Ok(ll)
}

/// `−2·LL + k·ln n`.
pub fn bic(ll: f64, k: usize, n: usize) -> f64 {
    -2.0 * ll + k as f64 * (n as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let p = [0.8, 0.1, 0.1];
        assert_eq!(softmax(&p, 0.0, SoftmaxMode::Prob), vec![1.0 / 3.0; 3]);
        let s = softmax(&p, 5.0, SoftmaxMode::Prob);
        let z = (4.0f64).exp() + 2.0 * (0.5f64).exp();
        assert!((s[0] - (4.0f64).exp() / z).abs() < 1e-12);
        assert!((s[0] - 0.94305).abs() < 1e-5);
        let sharp = softmax(&p, 1e4, SoftmaxMode::Prob);
        assert!((sharp[0] - 1.0).abs() < 1e-12);
        let l = softmax(&p, 1.0, SoftmaxMode::Log);
        assert!((l[0] - 0.8).abs() < 1e-12);
        assert_eq!(softmax(&[0.0, 1.0], 3.0, SoftmaxMode::Log), vec![0.0, 1.0]);
    }

    #[test]
    fn baseline_bic_values() {
        let ll1 = 1800.0 * (1.0f64 / 9.0).ln();
        assert!((ll1 + 3955.004).abs() < 1e-3);
        assert!((bic(ll1, 0, 1800) - 7910.008).abs() < 1e-2);
        assert_eq!(bic(0.0, 0, 10), 0.0);
        assert!((bic(-3955.0, 0, 1800) - 7910.0).abs() < 1e-12);
        assert!((bic(-4889.0, 0, 1632) - 9778.0).abs() < 1e-12);
    }
}
