//! Test-split metrics: MAE, unimodality rate, entropy ratio and
//! mode-probability histograms split by correctness. Entropies are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{class_from_output, OrdinalModel};
use crate::nn::Output;
use crate::prob::{entropy, is_unimodal};
use crate::tol::HIST_BINS;

/// Mean absolute difference of class indices.
pub fn mae(preds: &[usize], truth: &[usize]) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch(preds.len(), truth.len()));
    }
    if preds.is_empty() {
        return Err(domain("mae of an empty set"));
    }
    let s: usize = preds.iter().zip(truth).map(|(p, t)| p.abs_diff(*t)).sum();
    Ok(s as f64 / preds.len() as f64)
}

/// Bin of `p` among [`HIST_BINS`] equal bins over `[0, 1]`; `1.0` goes in
/// the last bin.
pub fn hist_bin(p: f64) -> usize {
    ((p * HIST_BINS as f64).floor().max(0.0) as usize).min(HIST_BINS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHistograms {
    pub correct: Vec<usize>,
    pub incorrect: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub n: usize,
    pub n_correct: usize,
    pub mae: f64,
    /// Absent for scalar outputs.
    pub unimodal_rate: Option<f64>,
    /// Mean entropy of incorrect predictions over that of correct ones;
    /// absent unless both sets are non-empty with positive denominator.
    pub entropy_ratio: Option<f64>,
    pub mean_entropy_correct: Option<f64>,
    pub mean_entropy_incorrect: Option<f64>,
    pub mean_mode_prob_correct: Option<f64>,
    pub mean_mode_prob_incorrect: Option<f64>,
    /// Histograms of `max_i p_i`; absent for scalar outputs.
    pub mode_hist: Option<ModeHistograms>,
    /// Mean latent scale, for heads that have one.
    pub mean_scale: Option<f64>,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

/// Metrics of precomputed outputs. `scales`, when given, holds one latent
/// scale per item.
pub fn evaluate_outputs(outputs: &[Output], truth: &[usize], k: usize, scales: Option<&[f64]>) -> Result<EvalResult> {
    if outputs.len() != truth.len() {
        return Err(Error::LengthMismatch(outputs.len(), truth.len()));
    }
    if outputs.is_empty() {
        return Err(domain("cannot evaluate on an empty split"));
    }
    let preds: Vec<usize> = outputs.iter().map(|o| class_from_output(o, k)).collect();
    let n = truth.len();
    let n_correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    let probabilistic = outputs.iter().all(|o| o.probs().is_some());
    let mut unimodal = 0usize;
    let (mut h_ok, mut h_bad, mut m_ok, mut m_bad) = (0.0, 0.0, 0.0, 0.0);
    let mut hist = ModeHistograms { correct: vec![0; HIST_BINS], incorrect: vec![0; HIST_BINS] };
    if probabilistic {
        for ((o, p), t) in outputs.iter().zip(&preds).zip(truth) {
            let q = o.probs().expect("checked above").as_slice();
            unimodal += is_unimodal(q) as usize;
            let mode = q.iter().copied().fold(0.0, f64::max);
            let h = entropy(q);
            if p == t {
                h_ok += h;
                m_ok += mode;
                hist.correct[hist_bin(mode)] += 1;
            } else {
                h_bad += h;
                m_bad += mode;
                hist.incorrect[hist_bin(mode)] += 1;
            }
        }
    }
    let n_bad = n - n_correct;
    let (mean_h_ok, mean_h_bad) = if probabilistic { (mean(h_ok, n_correct), mean(h_bad, n_bad)) } else { (None, None) };
    let entropy_ratio = match (mean_h_ok, mean_h_bad) {
        (Some(a), Some(b)) if a > 0.0 => Some(b / a),
        _ => None,
    };
    let mean_scale = match scales {
        Some(s) if s.len() == n => Some(s.iter().sum::<f64>() / n as f64),
        Some(s) => return Err(Error::LengthMismatch(s.len(), n)),
        None => None,
    };
    Ok(EvalResult {
        n,
        n_correct,
        mae: mae(&preds, truth)?,
        unimodal_rate: probabilistic.then(|| unimodal as f64 / n as f64),
        entropy_ratio,
        mean_entropy_correct: mean_h_ok,
        mean_entropy_incorrect: mean_h_bad,
        mean_mode_prob_correct: if probabilistic { mean(m_ok, n_correct) } else { None },
        mean_mode_prob_incorrect: if probabilistic { mean(m_bad, n_bad) } else { None },
        mode_hist: probabilistic.then_some(hist),
        mean_scale,
    })
}

/// Evaluates `model` on row-major `x` with labels `truth`.
pub fn evaluate(model: &dyn OrdinalModel, x: &[f64], truth: &[usize]) -> Result<EvalResult> {
    let d = model.input_dim();
    if x.len() != truth.len() * d {
        return Err(Error::LengthMismatch(x.len(), truth.len() * d));
    }
    let mut outputs = Vec::with_capacity(truth.len());
    let mut scales = Vec::with_capacity(truth.len());
    let mut has_scale = true;
    for row in x.chunks(d) {
        outputs.push(model.predict(row)?);
        match model.latent_scale(row)? {
            Some(s) => scales.push(s),
            None => has_scale = false,
        }
    }
    evaluate_outputs(&outputs, truth, model.k(), has_scale.then_some(&scales[..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ProbVector;

    fn dist(p: &[f64]) -> Output {
        Output::Distribution(ProbVector::new(p.to_vec()).unwrap())
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(mae(&[1, 2, 3], &[1, 3, 5]).unwrap(), 1.0);
        assert_eq!(mae(&[1; 4], &[8; 4]).unwrap(), 7.0);
        assert!(mae(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn perfect_one_hot_classifier() {
        let outs: Vec<Output> = (1..=3).map(|c| Output::Distribution(ProbVector::one_hot(c, 3).unwrap())).collect();
        let r = evaluate_outputs(&outs, &[1, 2, 3], 3, None).unwrap();
        assert_eq!(r.mae, 0.0);
        assert_eq!(r.unimodal_rate, Some(1.0));
        assert_eq!(r.entropy_ratio, None);
        assert_eq!(r.mode_hist.unwrap().correct[HIST_BINS - 1], 3);
    }

    #[test]
    fn entropy_ratio_example() {
        let outs = [dist(&[0.9, 0.1]), dist(&[0.5, 0.5])];
        let r = evaluate_outputs(&outs, &[1, 2], 2, None).unwrap();
        let h1 = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert!((h1 - 0.3251).abs() < 1e-4);
        assert!((r.entropy_ratio.unwrap() - 2f64.ln() / h1).abs() < 1e-12);
        assert!((r.entropy_ratio.unwrap() - 2.1320).abs() < 5e-4);
        let h = r.mode_hist.unwrap();
        assert_eq!(h.correct.iter().sum::<usize>(), 1);
        assert_eq!(h.incorrect.iter().sum::<usize>(), 1);
        assert_eq!(h.correct[18], 1);
        assert_eq!(h.incorrect[10], 1);
    }

    #[test]
    fn scalar_outputs() {
        let outs = [Output::Scalar(1.2), Output::Scalar(3.7)];
        let r = evaluate_outputs(&outs, &[1, 2], 4, None).unwrap();
        assert_eq!(r.mae, 1.0);
        assert_eq!(r.unimodal_rate, None);
        assert!(r.mode_hist.is_none());
    }

    #[test]
    fn empty_split_rejected() {
        assert!(evaluate_outputs(&[], &[], 3, None).is_err());
    }

    #[test]
    fn non_unimodal_counted() {
        let outs = [dist(&[0.4, 0.2, 0.4]), dist(&[0.2, 0.6, 0.2])];
        let r = evaluate_outputs(&outs, &[1, 2], 3, None).unwrap();
        assert_eq!(r.unimodal_rate, Some(0.5));
    }

    #[test]
    fn bins() {
        assert_eq!(hist_bin(0.0), 0);
        assert_eq!(hist_bin(0.05), 1);
        assert_eq!(hist_bin(0.999), 19);
        assert_eq!(hist_bin(1.0), 19);
    }
}
