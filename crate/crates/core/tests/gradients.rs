//! End-to-end gradient checks: analytic parameter gradients of every
//! head×loss pipeline against central finite differences of the loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unimodal_ordinal::nn::{
    backward_step, batch_loss, loss_and_param_grad, Activation, Adam, Example, HeadKind, LossKind,
    Mlp, MlpSpec, Target,
};
use unimodal_ordinal::soft_targets::{make_soft_target, SoftTargetSpec};
use unimodal_ordinal::unimodal::Family;

const K: usize = 5;

fn pipelines() -> Vec<(&'static str, HeadKind, LossKind, Option<SoftTargetSpec>)> {
    let uni = |family| HeadKind::Unimodal { k: K, family };
    vec![
        ("regression+mse", HeadKind::LinearRegression { k: K }, LossKind::Mse, None),
        ("softmax+ce", HeadKind::Softmax { k: K }, LossKind::CrossEntropy, None),
        ("softmax+ot", HeadKind::Softmax { k: K }, LossKind::OptimalTransport { m: 1.0 }, None),
        ("softmax+ot2", HeadKind::Softmax { k: K }, LossKind::OptimalTransport { m: 2.0 }, None),
        ("unimodal+ce", uni(Family::Normal), LossKind::CrossEntropy, None),
        ("unimodal+ot", uni(Family::Normal), LossKind::OptimalTransport { m: 1.0 }, None),
        ("logistic+ot", uni(Family::Logistic), LossKind::OptimalTransport { m: 1.0 }, None),
        ("cauchy+ot", uni(Family::Cauchy), LossKind::OptimalTransport { m: 2.0 }, None),
        ("binomial+ot", HeadKind::Binomial { k: K }, LossKind::OptimalTransport { m: 1.0 }, None),
        ("softmax+kl-sq", HeadKind::Softmax { k: K }, LossKind::KlToSoftTarget, Some(SoftTargetSpec::squared_exp())),
        ("softmax+kl-lin", HeadKind::Softmax { k: K }, LossKind::KlToSoftTarget, Some(SoftTargetSpec::linear_exp())),
        ("softmax+ot-mix", HeadKind::Softmax { k: K }, LossKind::OptimalTransport { m: 1.0 }, Some(SoftTargetSpec::mix())),
    ]
}

fn random_batch(rng: &mut ChaCha8Rng, dim: usize, n: usize, soft: Option<SoftTargetSpec>) -> (Vec<f64>, Vec<Target>) {
    let x = (0..dim * n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let t = (0..n)
        .map(|_| {
            let y = rng.gen_range(1..=K);
            match soft {
                Some(s) => Target::Soft(make_soft_target(&s, y, K).unwrap()),
                None => Target::Class(y),
            }
        })
        .collect();
    (x, t)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Probes `per_net` random parameters of each of `nets` random networks.
fn check(activation: Activation, nets: u64, per_net: usize) {
    let dim = 8;
    for (name, head, loss, soft) in pipelines() {
        let mut worst: f64 = 0.0;
        let mut probes = 0;
        for seed in 0..nets {
            let spec = MlpSpec { input_dim: dim, hidden: vec![8], activation, head, seed };
            let mut model = Mlp::new(spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let (x, t) = random_batch(&mut rng, dim, 3, soft);
            let batch: Vec<Example> = (0..3).map(|i| Example { x: &x[i * dim..(i + 1) * dim], target: &t[i] }).collect();
            let (_, grad) = loss_and_param_grad(&model, &batch, &loss).unwrap();
            for _ in 0..per_net {
                let i = rng.gen_range(0..model.n_params());
                let h = 1e-5;
                let orig = model.params()[i];
                model.params_mut()[i] = orig + h;
                let up = batch_loss(&model, &batch, &loss).unwrap();
                model.params_mut()[i] = orig - h;
                let down = batch_loss(&model, &batch, &loss).unwrap();
                model.params_mut()[i] = orig;
                let fd = (up - down) / (2.0 * h);
                let e = rel_err(grad[i], fd);
                assert!(e < 1e-4, "{name} seed {seed} param {i}: analytic {} vs fd {fd} (rel {e})", grad[i]);
                worst = worst.max(e);
                probes += 1;
            }
        }
        println!("{name:16} {activation:?}: {probes} probes, worst rel err {worst:.2e}");
    }
}

#[test]
fn tanh_pipelines_match_finite_differences() {
    check(Activation::Tanh, 10, 12);
}

#[test]
fn relu_pipelines_match_finite_differences() {
    check(Activation::Relu, 5, 12);
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let spec = MlpSpec { input_dim: 4, hidden: vec![6], activation: Activation::Relu, head: HeadKind::Unimodal { k: 4, family: Family::Normal }, seed: 3 };
    let mut model = Mlp::new(spec).unwrap();
    let before = model.params().to_vec();
    let x = [0.1, 0.2, -0.3, 0.4];
    let t = Target::Class(2);
    let mut opt = Adam::new(model.n_params(), (0.9, 0.999), 1e-8, 1e-4);
    let l = backward_step(&mut model, &[Example { x: &x, target: &t }], &LossKind::OptimalTransport { m: 1.0 }, &mut opt, 0.0).unwrap();
    assert!(l > 0.0);
    assert_eq!(model.params(), &before[..]);
}

#[test]
fn empty_batch_is_rejected() {
    let spec = MlpSpec { input_dim: 2, hidden: vec![], activation: Activation::Relu, head: HeadKind::Softmax { k: 3 }, seed: 0 };
    let mut model = Mlp::new(spec).unwrap();
    let mut opt = Adam::new(model.n_params(), (0.9, 0.999), 1e-8, 0.0);
    assert!(backward_step(&mut model, &[], &LossKind::CrossEntropy, &mut opt, 0.1).is_err());
}
