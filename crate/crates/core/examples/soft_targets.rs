//! Soft label shapes, and what a softmax trained on them outputs.

use unimodal_ordinal::nn::{Activation, HeadKind, LossKind, MlpSpec, TrainConfig};
use unimodal_ordinal::soft_targets::{make_soft_target, train_with_soft_targets, SoftTargetSpec};
use unimodal_ordinal::OrdinalModel;

fn main() -> unimodal_ordinal::Result<()> {
    let k = 6;
    let specs = [
        ("squared-exp", SoftTargetSpec::squared_exp()),
        ("linear-exp", SoftTargetSpec::linear_exp()),
        ("mix", SoftTargetSpec::mix()),
    ];
    for (name, spec) in &specs {
        println!("{name:<12} target for class 2: {:.3?}", make_soft_target(spec, 2, k)?.as_slice());
    }

    let x: Vec<f64> = (0..240).map(|i| (i % k) as f64 + 0.3 * ((i * 7) as f64).sin()).collect();
    let labels: Vec<usize> = (0..240).map(|i| 1 + i % k).collect();
    let spec = MlpSpec { input_dim: 1, hidden: vec![16], activation: Activation::Relu, head: HeadKind::Softmax { k }, seed: 3 };
    let cfg = TrainConfig { epochs: 60, learning_rate: 1e-2, ..TrainConfig::default() };
    let (net, curve) = train_with_soft_targets(spec, &x, &labels, &SoftTargetSpec::squared_exp(), &LossKind::KlToSoftTarget, &cfg)?;
    println!("final training loss {:.4}", curve.last().map_or(f64::NAN, |e| e.train_loss));
    let mut bimodal = 0;
    for v in (0..=100).map(|i| -1.0 + 7.0 * i as f64 / 100.0) {
        let out = net.predict(&[v])?;
        if out.probs().is_some_and(|p| !p.is_unimodal()) {
            bimodal += 1;
        }
    }
    println!("{bimodal} of 101 probe inputs give a non-unimodal prediction");
    Ok(())
}
