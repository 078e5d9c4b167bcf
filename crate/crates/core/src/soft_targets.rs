//! Soft label generators that replace a one-hot target with a distribution
//! peaked at the true class.
//!
//! These make the *targets* unimodal. Nothing constrains what a softmax
//! trained on them outputs at inference time.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::nn::{fit, EpochStats, HeadKind, LossKind, Mlp, MlpSpec, Samples, Target, TrainConfig};
use crate::prob::{LabelSpace, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SoftTargetSpec {
    /// `exp(-tau |i - j|^2)`, normalized.
    SquaredExp { tau: f64 },
    /// `exp(-tau |i - j|)`, normalized.
    LinearExp { tau: f64 },
    /// `w_dirac * onehot + w_uniform * uniform + w_exp * LinearExp(tau)`.
    DiracUniformLinearMix { tau: f64, w_dirac: f64, w_uniform: f64, w_exp: f64 },
}

impl SoftTargetSpec {
    pub fn squared_exp() -> Self {
        SoftTargetSpec::SquaredExp { tau: 1.0 }
    }

    pub fn linear_exp() -> Self {
        SoftTargetSpec::LinearExp { tau: 1.0 }
    }

    pub fn mix() -> Self {
        SoftTargetSpec::DiracUniformLinearMix { tau: 1.0, w_dirac: 0.5, w_uniform: 0.1, w_exp: 0.4 }
    }

    pub fn validate(&self) -> Result<()> {
        let tau = match *self {
            SoftTargetSpec::SquaredExp { tau } | SoftTargetSpec::LinearExp { tau } => tau,
            SoftTargetSpec::DiracUniformLinearMix { tau, w_dirac, w_uniform, w_exp } => {
                let w = [w_dirac, w_uniform, w_exp];
                if w.iter().any(|v| !(*v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(config(format!(
                        "mixture weights must be >= 0 and sum to 1, got {w:?}"
                    )));
                }
                tau
            }
        };
        // +inf is allowed and gives the one-hot limit
        if !(tau > 0.0) {
            return Err(config(format!("temperature must be > 0, got {tau}")));
        }
        Ok(())
    }
}

fn decaying(j: usize, k: usize, tau: f64, power: i32) -> Vec<f64> {
    let w: Vec<f64> = (1..=k)
        .map(|i| {
            if i == j {
                1.0
            } else {
                (-tau * (i.abs_diff(j) as f64).powi(power)).exp()
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Soft target for true class `j` (1-based) over `k` classes.
pub fn make_soft_target(spec: &SoftTargetSpec, j: usize, k: usize) -> Result<ProbVector> {
    spec.validate()?;
    LabelSpace::new(k)?.check(j)?;
    let p = match *spec {
        SoftTargetSpec::SquaredExp { tau } => decaying(j, k, tau, 2),
        SoftTargetSpec::LinearExp { tau } => decaying(j, k, tau, 1),
        SoftTargetSpec::DiracUniformLinearMix { tau, w_dirac, w_uniform, w_exp } => {
            let e = decaying(j, k, tau, 1);
            (1..=k)
                .map(|i| {
                    let dirac = if i == j { 1.0 } else { 0.0 };
                    w_dirac * dirac + w_uniform / k as f64 + w_exp * e[i - 1]
                })
                .collect()
        }
    };
    ProbVector::from_weights(p)
}

/// Trains a softmax network with every label replaced by its soft target.
///
/// `loss` must be [`LossKind::KlToSoftTarget`] or transport with `m = 1`
/// (computed on cumulative mass functions).
pub fn train_with_soft_targets(
    model_spec: MlpSpec,
    x: &[f64],
    labels: &[usize],
    spec: &SoftTargetSpec,
    loss: &LossKind,
    cfg: &TrainConfig,
) -> Result<(Mlp, Vec<EpochStats>)> {
    let k = match model_spec.head {
        HeadKind::Softmax { k } => k,
        other => {
            return Err(config(format!("soft targets need a softmax head, got {}", other.label())))
        }
    };
    if !matches!(loss, LossKind::KlToSoftTarget | LossKind::OptimalTransport { .. }) {
        return Err(config(format!("soft targets train with KL or transport, got {}", loss.label())));
    }
    let targets = labels
        .iter()
        .map(|&y| make_soft_target(spec, y, k).map(Target::Soft))
        .collect::<Result<Vec<_>>>()?;
    let data = Samples::new(x, model_spec.input_dim, &targets)?;
    let mut model = Mlp::new(model_spec)?;
    let curve = fit(&mut model, &data, loss, cfg)?;
    Ok((model, curve))
}
