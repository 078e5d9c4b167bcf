//! Output layers: map the raw outputs of the last dense layer to a
//! prediction, and pull output gradients back to the raw outputs.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::prob::{LabelSpace, ProbVector};
use crate::special::{sigmoid, softplus};
use crate::unimodal::{head_grad, head_probs, BinGrid, Family, LocationScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadKind {
    /// One linear output; `k` is only used to clamp rounded predictions.
    LinearRegression { k: usize },
    Softmax { k: usize },
    /// Binned location–scale density, two raw outputs `(mu, s)`.
    Unimodal { k: usize, family: Family },
    /// `Binomial(k - 1, sigmoid(raw))` over classes `1..=k`.
    Binomial { k: usize },
}

impl HeadKind {
    pub fn k(&self) -> usize {
        match *self {
            HeadKind::LinearRegression { k }
            | HeadKind::Softmax { k }
            | HeadKind::Unimodal { k, .. }
            | HeadKind::Binomial { k } => k,
        }
    }

    /// Number of raw outputs the network must produce.
    pub fn raw_dim(&self) -> usize {
        match *self {
            HeadKind::LinearRegression { .. } | HeadKind::Binomial { .. } => 1,
            HeadKind::Softmax { k } => k,
            HeadKind::Unimodal { .. } => 2,
        }
    }

    pub fn is_probabilistic(&self) -> bool {
        !matches!(self, HeadKind::LinearRegression { .. })
    }

    pub fn validate(&self) -> Result<()> {
        LabelSpace::new(self.k()).map(|_| ()).map_err(|e| config(e.to_string()))
    }

    pub fn label(&self) -> String {
        match *self {
            HeadKind::LinearRegression { k } => format!("regression {k}"),
            HeadKind::Softmax { k } => format!("softmax {k}"),
            HeadKind::Unimodal { k, family } => format!("unimodal {k} {}", family.name()),
            HeadKind::Binomial { k } => format!("binomial {k}"),
        }
    }
}

/// What a head emits for one input.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Distribution(ProbVector),
    Scalar(f64),
}

impl Output {
    pub fn probs(&self) -> Option<&ProbVector> {
        match self {
            Output::Distribution(p) => Some(p),
            Output::Scalar(_) => None,
        }
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn ln_binomial_coeffs(n: usize) -> Vec<f64> {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    (0..=n).map(|i| ln_fact[n] - ln_fact[i] - ln_fact[n - i]).collect()
}

fn binomial_probs(k: usize, raw: f64) -> Vec<f64> {
    let n = k - 1;
    let ln_p = -softplus(-raw);
    let ln_q = -softplus(raw);
    let w: Vec<f64> = ln_binomial_coeffs(n)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c + i as f64 * ln_p + (n - i) as f64 * ln_q).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Location and scale produced by a unimodal head for the given raw outputs.
pub fn unimodal_params(family: Family, raw: &[f64]) -> LocationScale {
    LocationScale::from_raw(family, raw[0], raw[1])
}

/// Applies the head to raw outputs.
pub fn apply(kind: &HeadKind, raw: &[f64]) -> Output {
    match *kind {
        HeadKind::LinearRegression { .. } => Output::Scalar(raw[0]),
        HeadKind::Softmax { .. } => Output::Distribution(ProbVector::from_trusted(softmax(raw))),
        HeadKind::Unimodal { k, family } => {
            let grid = BinGrid::new(k).expect("validated k");
            Output::Distribution(head_probs(&grid, &unimodal_params(family, raw)))
        }
        HeadKind::Binomial { k } => {
            Output::Distribution(ProbVector::from_trusted(binomial_probs(k, raw[0])))
        }
    }
}

/// Output together with the Jacobian-vector machinery needed for backprop.
pub(crate) struct HeadForward {
    pub output: Output,
    jac: Jac,
}

enum Jac {
    Identity,
    Softmax(Vec<f64>),
    /// `dp/dmu`, `dp/ds` (scale derivative already chained through softplus).
    Unimodal(Vec<f64>, Vec<f64>),
    /// `dp/draw`
    Binomial(Vec<f64>),
}

pub(crate) fn forward(kind: &HeadKind, raw: &[f64]) -> HeadForward {
    match *kind {
        HeadKind::LinearRegression { .. } => {
            HeadForward { output: Output::Scalar(raw[0]), jac: Jac::Identity }
        }
        HeadKind::Softmax { .. } => {
            let p = softmax(raw);
            HeadForward {
                output: Output::Distribution(ProbVector::from_trusted(p.clone())),
                jac: Jac::Softmax(p),
            }
        }
        HeadKind::Unimodal { k, family } => {
            let grid = BinGrid::new(k).expect("validated k");
            let j = head_grad(&grid, &unimodal_params(family, raw));
            let ds_dsraw = sigmoid(raw[1]);
            let d_s = j.d_sigma.iter().map(|v| v * ds_dsraw).collect();
            HeadForward {
                output: Output::Distribution(ProbVector::from_trusted(j.probs)),
                jac: Jac::Unimodal(j.d_mu, d_s),
            }
        }
        HeadKind::Binomial { k } => {
            let p = binomial_probs(k, raw[0]);
            let n = (k - 1) as f64;
            let prob = sigmoid(raw[0]);
            let d = p.iter().enumerate().map(|(i, pi)| pi * (i as f64 - n * prob)).collect();
            HeadForward {
                output: Output::Distribution(ProbVector::from_trusted(p)),
                jac: Jac::Binomial(d),
            }
        }
    }
}

impl HeadForward {
    /// Pulls `dL/d(output)` back to `dL/d(raw)`, written into `out`.
    pub fn backward(&self, g: &[f64], out: &mut [f64]) {
        match &self.jac {
            Jac::Identity => out[0] = g[0],
            Jac::Softmax(p) => {
                let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
                for (o, (pi, gi)) in out.iter_mut().zip(p.iter().zip(g)) {
                    *o = pi * (gi - dot);
                }
            }
            Jac::Unimodal(d_mu, d_s) => {
                out[0] = d_mu.iter().zip(g).map(|(a, b)| a * b).sum();
                out[1] = d_s.iter().zip(g).map(|(a, b)| a * b).sum();
            }
            Jac::Binomial(d) => out[0] = d.iter().zip(g).map(|(a, b)| a * b).sum(),
        }
    }
}
