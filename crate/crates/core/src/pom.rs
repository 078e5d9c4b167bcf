//! Proportional odds model: `Pr(Y <= j | x) = F(a_j - b.x)` with logistic
//! `F` and ordered thresholds `a_1 < ... < a_(k-1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::OrdinalModel;
use crate::nn::head::Output;
use crate::prob::ProbVector;
use crate::special::{sigmoid, softplus};

/// Smallest gap between consecutive fitted thresholds.
const MIN_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomParams {
    thresholds: Vec<f64>,
    weights: Vec<f64>,
}

impl PomParams {
    pub fn new(thresholds: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(domain("need at least one threshold (k >= 2)"));
        }
        if thresholds.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(domain("thresholds and weights must be finite"));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain(format!("thresholds must be strictly increasing: {thresholds:?}")));
        }
        Ok(Self { thresholds, weights })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::LengthMismatch(x.len(), self.weights.len()));
        }
        Ok(self.weights.iter().zip(x).map(|(b, v)| b * v).sum())
    }
}

/// `[F(a_1 - b.x), ..., F(a_(k-1) - b.x)]`.
pub fn pom_cumulative(params: &PomParams, x: &[f64]) -> Result<Vec<f64>> {
    let eta = params.score(x)?;
    Ok(params.thresholds.iter().map(|a| sigmoid(a - eta)).collect())
}

/// Mass of `(lo, hi]` under a logistic variable, from whichever tail is
/// small so nearby thresholds far from the center do not cancel.
fn interval_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        sigmoid(-lo) - sigmoid(-hi)
    } else {
        sigmoid(hi) - sigmoid(lo)
    }
}

/// Class probabilities: successive differences of the cumulative vector
/// padded with `F(-inf) = 0` and `F(inf) = 1`.
pub fn pom_class_probs(params: &PomParams, x: &[f64]) -> Result<ProbVector> {
    let eta = params.score(x)?;
    let cuts: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
        .chain(params.thresholds.iter().map(|a| a - eta))
        .chain(std::iter::once(f64::INFINITY))
        .collect();
    let w: Vec<f64> = cuts.windows(2).map(|c| interval_mass(c[0], c[1]).max(0.0)).collect();
    ProbVector::from_weights(w)
}

impl OrdinalModel for PomParams {
    fn k(&self) -> usize {
        PomParams::k(self)
    }

    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn predict(&self, x: &[f64]) -> Result<Output> {
        Ok(Output::Distribution(pom_class_probs(self, x)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PomFitOptions {
    pub learning_rate: f64,
    pub max_iter: usize,
    /// Stop once the mean log-likelihood improves by less than this over
    /// `window` iterations.
    pub tol: f64,
    pub window: usize,
}

impl Default for PomFitOptions {
    fn default() -> Self {
        Self { learning_rate: 0.05, max_iter: 20_000, tol: 1e-8, window: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomFit {
    pub params: PomParams,
    /// Mean log-likelihood per training row.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Mean log-likelihood at every accepted iteration.
    pub trace: Vec<f64>,
}

/// Unconstrained parameterization: `[a_1, u_2, ..., u_(k-1), b_1, ..., b_d]`
/// with `a_j = a_(j-1) + softplus(u_j) + MIN_GAP`.
struct Reparam {
    k: usize,
    d: usize,
}

impl Reparam {
    fn thresholds(&self, theta: &[f64]) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.k - 1);
        a.push(theta[0]);
        for j in 1..self.k - 1 {
            let prev = a[j - 1];
            a.push(prev + softplus(theta[j]) + MIN_GAP);
        }
        a
    }

    fn weights<'t>(&self, theta: &'t [f64]) -> &'t [f64] {
        &theta[self.k - 1..self.k - 1 + self.d]
    }

    fn params(&self, theta: &[f64]) -> PomParams {
        PomParams { thresholds: self.thresholds(theta), weights: self.weights(theta).to_vec() }
    }

    /// Mean log-likelihood and its gradient in `theta`.
    fn objective(&self, theta: &[f64], x: &[f64], y: &[usize]) -> (f64, Vec<f64>) {
        let (k, d) = (self.k, self.d);
        let a = self.thresholds(theta);
        let b = self.weights(theta);
        let mut ll = 0.0;
        let mut g_a = vec![0.0; k - 1];
        let mut g_b = vec![0.0; d];
        for (row, &cls) in x.chunks(d).zip(y) {
            let eta: f64 = b.iter().zip(row).map(|(bi, xi)| bi * xi).sum();
            let hi = if cls < k { a[cls - 1] - eta } else { f64::INFINITY };
            let lo = if cls > 1 { a[cls - 2] - eta } else { f64::NEG_INFINITY };
            let p = interval_mass(lo, hi).max(1e-300);
            ll += p.ln();
            let dens = |c: f64| if c.is_finite() { sigmoid(c) * sigmoid(-c) } else { 0.0 };
            let d_hi = dens(hi) / p;
            let d_lo = -dens(lo) / p;
            if cls < k {
                g_a[cls - 1] += d_hi;
            }
            if cls > 1 {
                g_a[cls - 2] += d_lo;
            }
            let d_eta = -(d_hi + d_lo);
            for (g, xi) in g_b.iter_mut().zip(row) {
                *g += d_eta * xi;
            }
        }
        let n = y.len() as f64;
        let mut grad = vec![0.0; theta.len()];
        // a_j depends on a_1 and every u_l with l <= j
        let mut tail = 0.0;
        for j in (0..k - 1).rev() {
            tail += g_a[j];
            grad[j] = if j == 0 { tail } else { tail * sigmoid(theta[j]) };
        }
        grad[k - 1..].copy_from_slice(&g_b);
        grad.iter_mut().for_each(|g| *g /= n);
        (ll / n, grad)
    }
}

fn inv_softplus(v: f64) -> f64 {
    // ln(e^v - 1), stable for large v
    if v > 30.0 {
        v
    } else {
        v.exp_m1().ln()
    }
}

/// Maximum-likelihood fit by full-batch Adam ascent.
///
/// A step that lowers the likelihood is rolled back and the step size
/// halved, so the recorded likelihood never decreases.
pub fn pom_fit(x: &[f64], dim: usize, y: &[usize], k: usize, opts: &PomFitOptions) -> Result<PomFit> {
    if dim == 0 || x.len() != dim * y.len() {
        return Err(Error::LengthMismatch(x.len(), dim * y.len()));
    }
    if k < 2 {
        return Err(domain("k must be >= 2"));
    }
    if let Some(bad) = y.iter().find(|&&c| !(1..=k).contains(&c)) {
        return Err(domain(format!("label {bad} outside 1..={k}")));
    }
    let mut counts = vec![0usize; k];
    y.iter().for_each(|&c| counts[c - 1] += 1);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(domain("labels must span at least two classes"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(domain("features must be finite"));
    }

    // start from the marginal cumulative logits with zero weights
    let n = y.len() as f64;
    let mut init_a = Vec::with_capacity(k - 1);
    let mut cum = 0.0;
    for c in &counts[..k - 1] {
        cum += *c as f64 / n;
        let q = cum.clamp(1e-4, 1.0 - 1e-4);
        let logit = (q / (1.0 - q)).ln();
        let floor = init_a.last().map_or(f64::NEG_INFINITY, |p: &f64| p + 1e-3);
        init_a.push(logit.max(floor));
    }
    let re = Reparam { k, d: dim };
    let mut theta = vec![0.0; k - 1 + dim];
    theta[0] = init_a[0];
    for j in 1..k - 1 {
        theta[j] = inv_softplus((init_a[j] - init_a[j - 1] - MIN_GAP).max(1e-6));
    }

    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut t = 0;
    let mut lr = opts.learning_rate;
    let (mut ll, mut grad) = re.objective(&theta, x, y);
    if !ll.is_finite() {
        return Err(Error::Numerical("initial log-likelihood is not finite".into()));
    }
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        t += 1;
        let mut cand = theta.clone();
        let (bc1, bc2) = (1.0 - f64::powi(b1, t), 1.0 - f64::powi(b2, t));
        for i in 0..theta.len() {
            // ascent on the likelihood
            let g = -grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            cand[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
        }
        let (cand_ll, cand_grad) = re.objective(&cand, x, y);
        if !cand_ll.is_finite() {
            return Err(Error::Numerical(format!(
                "log-likelihood became non-finite at iteration {iterations}"
            )));
        }
        if cand_ll >= ll {
            theta = cand;
            ll = cand_ll;
            grad = cand_grad;
            trace.push(ll);
            lr = (lr * 1.05).min(opts.learning_rate);
        } else {
            lr *= 0.5;
            m.iter_mut().for_each(|x| *x = 0.0);
            v.iter_mut().for_each(|x| *x = 0.0);
            t = 0;
            if lr < 1e-12 {
                converged = true;
                break;
            }
            continue;
        }
        let w = opts.window;
        if trace.len() > w && trace[trace.len() - 1] - trace[trace.len() - 1 - w] < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(PomFit { params: re.params(&theta), log_likelihood: ll, iterations, converged, trace })
}

/// Mean log-likelihood of labelled rows under `params`.
pub fn pom_log_likelihood(params: &PomParams, x: &[f64], y: &[usize]) -> Result<f64> {
    let d = params.dim();
    let mut total = 0.0;
    for (row, &c) in x.chunks(d).zip(y) {
        total += pom_class_probs(params, row)?.prob(c).max(1e-300).ln();
    }
    Ok(total / y.len() as f64)
}

/// A POM configuration and input whose output is not unimodal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomWitness {
    pub params: PomParams,
    pub x: Vec<f64>,
    pub probs: ProbVector,
}

/// Random search for a non-unimodal POM output with `k` classes: random
/// threshold gaps over a one-dimensional shifted logistic.
pub fn find_non_unimodal_pom(k: usize, trials: usize, seed: u64) -> Result<Option<PomWitness>> {
    if k < 2 {
        return Err(domain("k must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut a = Vec::with_capacity(k - 1);
        let mut cur = rng.gen_range(-4.0..0.0);
        for _ in 0..k - 1 {
            a.push(cur);
            cur += rng.gen_range(0.01..3.0);
        }
        let params = PomParams::new(a, vec![rng.gen_range(-2.0..2.0)])?;
        let x = vec![rng.gen_range(-2.0..2.0)];
        let probs = pom_class_probs(&params, &x)?;
        if !probs.is_unimodal() {
            return Ok(Some(PomWitness { params, x, probs }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_examples() {
        let p = PomParams::new(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(pom_cumulative(&p, &[3.0]).unwrap(), vec![0.5]);
        let p = PomParams::new(vec![-1.0, 1.0], vec![0.0]).unwrap();
        let c = pom_cumulative(&p, &[1.0]).unwrap();
        assert!((c[0] - 0.268941).abs() < 1e-6 && (c[1] - 0.731059).abs() < 1e-6);
        let probs = pom_class_probs(&p, &[1.0]).unwrap();
        for (a, b) in probs.as_slice().iter().zip([0.268941, 0.462117, 0.268941]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn two_class_probs() {
        let p = PomParams::new(vec![0.3], vec![0.5, -1.0]).unwrap();
        let x = [1.0, 2.0];
        let c = sigmoid(0.3 - (0.5 - 2.0));
        let probs = pom_class_probs(&p, &x).unwrap();
        assert!((probs.as_slice()[0] - c).abs() < 1e-15);
        assert!((probs.as_slice()[1] - (1.0 - c)).abs() < 1e-15);
    }

    #[test]
    fn rejects_unordered_thresholds() {
        assert!(PomParams::new(vec![1.0, 1.0], vec![0.0]).is_err());
        assert!(PomParams::new(vec![], vec![0.0]).is_err());
    }

    #[test]
    fn fit_rejects_single_class() {
        let x = [0.1, 0.2, 0.3];
        assert!(pom_fit(&x, 1, &[2, 2, 2], 3, &PomFitOptions::default()).is_err());
        assert!(pom_fit(&x, 1, &[1, 2, 4], 3, &PomFitOptions::default()).is_err());
    }

    #[test]
    fn objective_gradient_matches_differences() {
        let re = Reparam { k: 4, d: 2 };
        let x = [0.5, -1.0, 1.5, 0.2, -0.3, 0.8, 2.0, -2.0];
        let y = [1, 2, 4, 3];
        let theta = [-0.5, 0.1, -0.4, 0.7, -0.2];
        let (_, g) = re.objective(&theta, &x, &y);
        for i in 0..theta.len() {
            let h = 1e-6;
            let mut tp = theta;
            tp[i] += h;
            let mut tm = theta;
            tm[i] -= h;
            let fd = (re.objective(&tp, &x, &y).0 - re.objective(&tm, &x, &y).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn search_finds_bimodal_output() {
        let w = find_non_unimodal_pom(4, 10_000, 1).unwrap().expect("witness");
        assert!(!w.probs.is_unimodal());
        assert_eq!(pom_class_probs(&w.params, &w.x).unwrap(), w.probs);
    }
}
