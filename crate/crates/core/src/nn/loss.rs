use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::nn::head::{HeadKind, Output};
use crate::prob::ProbVector;
use crate::tol::LOG_CLAMP;
use crate::transport::{ot_cmf_l1_grad, cmf_l1, GroundCost};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    /// `-ln p_y` against a one-hot label.
    CrossEntropy,
    /// Transport cost with ground cost `|i - j|^m`.
    OptimalTransport { m: f64 },
    /// `KL(target || output)` in nats.
    KlToSoftTarget,
}

impl LossKind {
    pub fn label(&self) -> String {
        match self {
            LossKind::Mse => "mse".into(),
            LossKind::CrossEntropy => "ce".into(),
            LossKind::OptimalTransport { m } => format!("ot(m={m})"),
            LossKind::KlToSoftTarget => "kl".into(),
        }
    }

    /// Rejects head/loss pairs whose output types do not match.
    pub fn check_head(&self, head: &HeadKind) -> Result<()> {
        match (self, head.is_probabilistic()) {
            (LossKind::Mse, false) => Ok(()),
            (LossKind::Mse, true) => Err(config(format!(
                "squared error needs a regression head, got {}",
                head.label()
            ))),
            (_, false) => Err(config(format!(
                "{} needs a probabilistic head, got {}",
                self.label(),
                head.label()
            ))),
            (LossKind::OptimalTransport { m }, true) => {
                GroundCost::new(*m, head.k()).map(|_| ()).map_err(|e| config(e.to_string()))
            }
            (_, true) => Ok(()),
        }
    }
}

/// Training target for one example.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// 1-based class.
    Class(usize),
    Soft(ProbVector),
}

impl Target {
    pub fn class(&self) -> Option<usize> {
        match self {
            Target::Class(c) => Some(*c),
            Target::Soft(_) => None,
        }
    }
}

/// Loss of one output against one target.
pub fn loss(kind: &LossKind, output: &Output, target: &Target) -> Result<f64> {
    loss_and_grad(kind, output, target).map(|(l, _)| l)
}

/// Loss and its gradient with respect to the head output (the probability
/// vector, or the scalar for regression).
pub fn loss_and_grad(kind: &LossKind, output: &Output, target: &Target) -> Result<(f64, Vec<f64>)> {
    match (kind, output) {
        (LossKind::Mse, Output::Scalar(y_hat)) => {
            let y = class_target(target, "squared error")? as f64;
            let d = y_hat - y;
            Ok((d * d, vec![2.0 * d]))
        }
        (LossKind::Mse, Output::Distribution(_)) => {
            Err(config("squared error is not defined on a probability vector"))
        }
        (_, Output::Scalar(_)) => {
            Err(config(format!("{} needs a probability output", kind.label())))
        }
        (LossKind::CrossEntropy, Output::Distribution(p)) => {
            let y = class_target(target, "cross entropy")?;
            check_class(y, p.k())?;
            let mut g = vec![0.0; p.k()];
            let py = p.prob(y);
            if py > LOG_CLAMP {
                g[y - 1] = -1.0 / py;
            }
            Ok((-py.max(LOG_CLAMP).ln(), g))
        }
        (LossKind::OptimalTransport { m }, Output::Distribution(p)) => {
            let cost = GroundCost::new(*m, p.k())?;
            match target {
                Target::Class(j) => {
                    check_class(*j, p.k())?;
                    let g = cost.column(*j);
                    let v = p.as_slice().iter().zip(&g).map(|(a, b)| a * b).sum();
                    Ok((v, g))
                }
                Target::Soft(t) => {
                    if *m != 1.0 {
                        return Err(config(format!(
                            "transport against soft targets needs m = 1, got {m}"
                        )));
                    }
                    check_len(t, p)?;
                    Ok((cmf_l1(p.as_slice(), t.as_slice()), ot_cmf_l1_grad(p.as_slice(), t.as_slice())))
                }
            }
        }
        (LossKind::KlToSoftTarget, Output::Distribution(q)) => {
            let owned;
            let t = match target {
                Target::Soft(t) => t,
                Target::Class(y) => {
                    check_class(*y, q.k())?;
                    owned = ProbVector::one_hot(*y, q.k())?;
                    &owned
                }
            };
            check_len(t, q)?;
            let mut v = 0.0;
            let mut g = vec![0.0; q.k()];
            for (i, (&ti, &qi)) in t.as_slice().iter().zip(q.as_slice()).enumerate() {
                if ti > 0.0 {
                    v += ti * (ti.ln() - qi.max(LOG_CLAMP).ln());
                    if qi > LOG_CLAMP {
                        g[i] = -ti / qi;
                    }
                }
            }
            Ok((v, g))
        }
    }
}

fn class_target(t: &Target, what: &str) -> Result<usize> {
    t.class().ok_or_else(|| config(format!("{what} needs a class label, got a soft target")))
}

fn check_class(y: usize, k: usize) -> Result<()> {
    if (1..=k).contains(&y) {
        Ok(())
    } else {
        Err(crate::error::domain(format!("class {y} outside 1..={k}")))
    }
}

fn check_len(a: &ProbVector, b: &ProbVector) -> Result<()> {
    if a.k() != b.k() {
        return Err(Error::LengthMismatch(a.k(), b.k()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> Output {
        Output::Distribution(ProbVector::new(v.to_vec()).unwrap())
    }

    #[test]
    fn ce_uniform() {
        let l = loss(&LossKind::CrossEntropy, &dist(&[0.25; 4]), &Target::Class(2)).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ce_blind_to_wrong_class_mass_ot_is_not() {
        let a = dist(&[0.5, 0.2, 0.3]);
        let b = dist(&[0.5, 0.3, 0.2]);
        let y = Target::Class(1);
        let ce = |o| loss(&LossKind::CrossEntropy, o, &y).unwrap();
        assert_eq!(ce(&a), ce(&b));
        let ot = |o| loss(&LossKind::OptimalTransport { m: 1.0 }, o, &y).unwrap();
        assert!((ot(&a) - 0.8).abs() < 1e-12);
        assert!((ot(&b) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn mse() {
        let l = loss(&LossKind::Mse, &Output::Scalar(2.5), &Target::Class(3)).unwrap();
        assert!((l - 0.25).abs() < 1e-15);
    }

    #[test]
    fn incompatible_pairs() {
        assert!(matches!(
            loss(&LossKind::Mse, &dist(&[0.5, 0.5]), &Target::Class(1)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            loss(&LossKind::CrossEntropy, &Output::Scalar(1.0), &Target::Class(1)),
            Err(Error::Config(_))
        ));
        let soft = Target::Soft(ProbVector::uniform(2).unwrap());
        assert!(loss(&LossKind::CrossEntropy, &dist(&[0.5, 0.5]), &soft).is_err());
        assert!(loss(&LossKind::OptimalTransport { m: 2.0 }, &dist(&[0.5, 0.5]), &soft).is_err());
        assert!(loss(&LossKind::Mse, &Output::Scalar(1.0), &soft).is_err());
        let bad = LossKind::Mse.check_head(&HeadKind::Softmax { k: 3 });
        assert!(bad.is_err());
        assert!(LossKind::CrossEntropy.check_head(&HeadKind::LinearRegression { k: 3 }).is_err());
        assert!(LossKind::OptimalTransport { m: 0.5 }.check_head(&HeadKind::Softmax { k: 3 }).is_err());
    }

    #[test]
    fn ce_clamps() {
        let l = loss(&LossKind::CrossEntropy, &dist(&[1.0, 0.0]), &Target::Class(2)).unwrap();
        assert!((l + LOG_CLAMP.ln()).abs() < 1e-12);
    }

    #[test]
    fn kl_with_one_hot_equals_ce() {
        let o = dist(&[0.1, 0.6, 0.3]);
        let ce = loss(&LossKind::CrossEntropy, &o, &Target::Class(3)).unwrap();
        let kl = loss(
            &LossKind::KlToSoftTarget,
            &o,
            &Target::Soft(ProbVector::one_hot(3, 3).unwrap()),
        )
        .unwrap();
        assert!((ce - kl).abs() < 1e-12);
    }
}
