//! Probability vectors over an ordered label set `1 ⪯ 2 ⪯ … ⪯ k`.
//!
//! Classes are 1-based throughout the public API: class `c` lives at slice
//! index `c - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::tol::{SUM_TOL, UNIMODAL_ADJ_TOL};

/// The number of ordered classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelSpace {
    k: usize,
}

impl LabelSpace {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(domain(format!("label space needs k >= 2, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, class: usize) -> bool {
        (1..=self.k).contains(&class)
    }

    pub fn check(&self, class: usize) -> Result<()> {
        if self.contains(class) {
            Ok(())
        } else {
            Err(domain(format!("class {class} outside 1..={}", self.k)))
        }
    }
}

/// A validated distribution over `k >= 2` ordered classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates nonnegativity, finiteness and `|sum - 1| <= 1e-9`.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(domain(format!("probability vector needs >= 2 entries, got {}", p.len())));
        }
        if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(domain(format!("entry {} is {v}; must be finite and >= 0", i + 1)));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(domain(format!("entries sum to {s}, expected 1")));
        }
        Ok(Self(p))
    }

    /// Normalizes nonnegative weights with a positive total.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(domain(format!("weights must have a positive finite sum, got {s}")));
        }
        Self::new(w.into_iter().map(|v| v / s).collect())
    }

    pub fn one_hot(class: usize, k: usize) -> Result<Self> {
        LabelSpace::new(k)?.check(class)?;
        let mut p = vec![0.0; k];
        p[class - 1] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        LabelSpace::new(k)?;
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    /// Wraps a vector produced by a head whose construction already
    /// guarantees validity. Checked in debug builds only.
    pub(crate) fn from_trusted(p: Vec<f64>) -> Self {
        debug_assert!(Self::new(p.clone()).is_ok(), "invalid head output {p:?}");
        Self(p)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Probability of 1-based class `c`.
    pub fn prob(&self, class: usize) -> f64 {
        self.0[class - 1]
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn is_unimodal(&self) -> bool {
        is_unimodal(&self.0)
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.0)
    }

    pub fn argmax_class(&self) -> usize {
        argmax_class(&self.0)
    }

    pub fn cmf(&self) -> Vec<f64> {
        cmf(&self.0)
    }

    /// `max_i p_i`, the probability of the mode.
    pub fn mode_prob(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = crate::Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// True iff the sequence rises (non-strictly) to some index and then falls
/// (non-strictly). Adjacent entries within `1e-12` compare as equal.
pub fn is_unimodal(p: &[f64]) -> bool {
    let mut descending = false;
    for w in p.windows(2) {
        let (a, b) = (w[0], w[1]);
        if descending {
            if b > a + UNIMODAL_ADJ_TOL {
                return false;
            }
        } else if b < a - UNIMODAL_ADJ_TOL {
            descending = true;
        }
    }
    true
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Smallest 1-based class attaining the maximum.
pub fn argmax_class(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best + 1
}

/// Cumulative mass function (prefix sums).
pub fn cmf(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unimodality_examples() {
        assert!(pv(&[0.1, 0.2, 0.4, 0.2, 0.1]).is_unimodal());
        assert!(!pv(&[0.3, 0.2, 0.3, 0.2]).is_unimodal());
        assert!(pv(&[0.25, 0.25, 0.25, 0.25]).is_unimodal());
        // valley plateau is not a peak
        assert!(!pv(&[0.3, 0.2, 0.2, 0.3]).is_unimodal());
        // monotone sequences and peak plateaus
        assert!(pv(&[0.1, 0.2, 0.3, 0.4]).is_unimodal());
        assert!(pv(&[0.1, 0.35, 0.35, 0.2]).is_unimodal());
    }

    #[test]
    fn unimodality_absorbs_roundoff() {
        assert!(is_unimodal(&[0.2, 0.3, 0.3 - 1e-14, 0.3, 0.2]));
        assert!(!is_unimodal(&[0.2, 0.3, 0.3 - 1e-9, 0.3, 0.2]));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(pv(&[0.0, 1.0, 0.0]).entropy(), 0.0);
        assert!((ProbVector::uniform(4).unwrap().entropy() - 4f64.ln()).abs() < 1e-12);
        assert!((pv(&[0.5, 0.5, 0.0]).entropy() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(pv(&[0.1, 0.7, 0.2]).argmax_class(), 2);
        assert_eq!(pv(&[0.5, 0.5]).argmax_class(), 1);
        assert_eq!(pv(&[0.2, 0.3, 0.5]).argmax_class(), 3);
    }

    #[test]
    fn cmf_examples() {
        let c = pv(&[0.2, 0.5, 0.3]).cmf();
        for (a, b) in c.iter().zip([0.2, 0.7, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ProbVector::one_hot(1, 3).unwrap().cmf(), vec![1.0, 1.0, 1.0]);
        assert_eq!(ProbVector::uniform(2).unwrap().cmf(), vec![0.5, 1.0]);
    }

    #[test]
    fn construction_rejects_invalid() {
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.1, -0.1]).is_err());
        assert!(ProbVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbVector::new(vec![1.0]).is_err());
        assert!(ProbVector::one_hot(0, 3).is_err());
        assert!(ProbVector::one_hot(4, 3).is_err());
        assert!(LabelSpace::new(1).is_err());
    }

    #[test]
    fn serde_validates() {
        let p: ProbVector = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(p.k(), 2);
        assert!(serde_json::from_str::<ProbVector>("[0.25,0.25]").is_err());
    }
}
