//! Randomized self-checks run by `ordbench verify`: unimodality fuzzing,
//! transport against the exact oracle, finite-difference gradients and the
//! non-unimodality witnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::head::apply;
use crate::nn::{batch_loss, loss, loss_and_param_grad, Activation, Example, HeadKind, LossKind, Mlp, MlpSpec, Output, Target};
use crate::pom::find_non_unimodal_pom;
use crate::prob::ProbVector;
use crate::soft_targets::{make_soft_target, SoftTargetSpec};
use crate::tol::SIGMA_FLOOR;
use crate::transport::{ot_cmf_l1, ot_dirac, ot_lp_oracle, GroundCost};
use crate::unimodal::{head_probs, verify_sub_bin_inequalities, BinGrid, Family, LocationScale};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Trial counts of each suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifySizes {
    pub lemma_draws: usize,
    pub lemma_proof_draws: usize,
    pub ot_draws: usize,
    pub grad_probes: usize,
    pub binomial_draws: usize,
    pub witness_trials: usize,
}

impl VerifySizes {
    /// The sizes used by the acceptance suite.
    pub fn full() -> Self {
        Self { lemma_draws: 100_000, lemma_proof_draws: 2_000, ot_draws: 10_000, grad_probes: 100, binomial_draws: 10_000, witness_trials: 100_000 }
    }

    pub fn quick() -> Self {
        Self { lemma_draws: 10_000, lemma_proof_draws: 200, ot_draws: 1_000, grad_probes: 20, binomial_draws: 1_000, witness_trials: 100_000 }
    }
}

fn random_prob(rng: &mut ChaCha8Rng, k: usize) -> ProbVector {
    // exponential weights give a uniform draw on the simplex; some entries
    // are zeroed to exercise sparse marginals
    let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    if rng.gen_bool(0.3) {
        let z = rng.gen_range(0..k);
        w[z] = 0.0;
    }
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    ProbVector::from_weights(w).expect("positive weights")
}

fn random_location_scale(rng: &mut ChaCha8Rng) -> (Family, f64, f64) {
    let family = Family::ALL[rng.gen_range(0..3)];
    let mu = rng.gen_range(-3.0..3.0);
    // log-uniform so that small scales are well represented
    let sigma = (rng.gen_range(SIGMA_FLOOR.ln()..10f64.ln())).exp();
    (family, mu, sigma)
}

/// `head_probs` over random families, locations, scales and class counts.
pub fn lemma_fuzz(draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first = String::new();
    for _ in 0..draws {
        let (family, mu, sigma) = random_location_scale(&mut rng);
        let k = rng.gen_range(2..=20);
        let p = head_probs(&BinGrid::new(k)?, &LocationScale::new(family, mu, sigma)?);
        if !p.is_unimodal() {
            failures += 1;
            if first.is_empty() {
                first = format!("first failure: {family:?} mu={mu} sigma={sigma} k={k} p={:?}", p.as_slice());
            }
        }
    }
    Ok(SuiteReport { name: "unimodal head fuzz".into(), checked: draws, failures, detail: first })
}

/// Sub-bin mass inequalities of the unimodality argument, by quadrature,
/// for locations inside the grid.
pub fn lemma_proof_check(draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut failures, mut checked) = (0, 0);
    let mut first = String::new();
    while checked < draws {
        let (family, _, sigma) = random_location_scale(&mut rng);
        let k = rng.gen_range(2..=20);
        let grid = BinGrid::new(k)?;
        let mu = rng.gen_range(-1.0..1.0);
        if grid.open_bin_of(mu).is_none() {
            continue;
        }
        checked += 1;
        if !verify_sub_bin_inequalities(&grid, &LocationScale::new(family, mu, sigma)?)? {
            failures += 1;
            if first.is_empty() {
                first = format!("first failure: {family:?} mu={mu} sigma={sigma} k={k}");
            }
        }
    }
    Ok(SuiteReport { name: "sub-bin inequalities".into(), checked, failures, detail: first })
}

/// Closed forms of the transport distance against the exact coupling.
pub fn ot_oracle_check(draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let k = rng.gen_range(2..=8);
        let m = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
        let cost = GroundCost::new(m, k)?;
        let q = random_prob(&mut rng, k);
        let j = rng.gen_range(1..=k);
        let closed = ot_dirac(&q, j, &cost)?;
        let (exact, _) = ot_lp_oracle(&q, &ProbVector::one_hot(j, k)?, &cost)?;
        let e = (closed - exact).abs();
        worst = worst.max(e);
        failures += (e > 1e-9) as usize;
    }
    for _ in 0..draws {
        let k = rng.gen_range(2..=8);
        let (p, q) = (random_prob(&mut rng, k), random_prob(&mut rng, k));
        let closed = ot_cmf_l1(&p, &q)?;
        let (exact, _) = ot_lp_oracle(&p, &q, &GroundCost::new(1.0, k)?)?;
        let e = (closed - exact).abs();
        worst = worst.max(e);
        failures += (e > 1e-9) as usize;
    }
    Ok(SuiteReport { name: "transport oracle".into(), checked: 2 * draws, failures, detail: format!("max abs error {worst:.2e}") })
}

/// Head, loss and optional soft target of every trained pipeline.
pub fn pipelines(k: usize) -> Vec<(String, HeadKind, LossKind, Option<SoftTargetSpec>)> {
    let ot = LossKind::OptimalTransport { m: 1.0 };
    let uni = HeadKind::Unimodal { k, family: Family::Normal };
    let sm = HeadKind::Softmax { k };
    vec![
        ("regression/mse".into(), HeadKind::LinearRegression { k }, LossKind::Mse, None),
        ("softmax/ce".into(), sm, LossKind::CrossEntropy, None),
        ("unimodal/ot".into(), uni, ot, None),
        ("softmax/ot".into(), sm, ot, None),
        ("unimodal/ce".into(), uni, LossKind::CrossEntropy, None),
        ("softmax/kl squared-exp".into(), sm, LossKind::KlToSoftTarget, Some(SoftTargetSpec::squared_exp())),
        ("softmax/kl linear-exp".into(), sm, LossKind::KlToSoftTarget, Some(SoftTargetSpec::linear_exp())),
        ("softmax/ot mix".into(), sm, ot, Some(SoftTargetSpec::mix())),
        ("binomial/ot".into(), HeadKind::Binomial { k }, ot, None),
    ]
}

/// Relative error used by the gradient checks.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences of the mean batch loss against the analytic
/// parameter gradient, `probes` random parameters per pipeline, on small
/// tanh networks (smooth, so differences are not spoiled by kinks).
pub fn gradient_check(probes: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    const K: usize = 5;
    const DIM: usize = 8;
    const H: f64 = 1e-5;
    let mut out = Vec::new();
    for (pi, (name, head, loss, soft)) in pipelines(K).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(pi as u64));
        let (mut failures, mut worst, mut done) = (0, 0.0f64, 0);
        let mut net = 0u64;
        while done < probes {
            let spec = MlpSpec { input_dim: DIM, hidden: vec![8], activation: Activation::Tanh, head, seed: seed + net };
            net += 1;
            let mut model = Mlp::new(spec)?;
            let x: Vec<f64> = (0..3 * DIM).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let targets = (0..3)
                .map(|_| {
                    let y = rng.gen_range(1..=K);
                    Ok(match soft {
                        Some(s) => Target::Soft(make_soft_target(&s, y, K)?),
                        None => Target::Class(y),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let batch: Vec<Example> = (0..3).map(|i| Example { x: &x[i * DIM..(i + 1) * DIM], target: &targets[i] }).collect();
            let (_, grad) = loss_and_param_grad(&model, &batch, &loss)?;
            for _ in 0..10.min(probes - done) {
                let i = rng.gen_range(0..model.n_params());
                let orig = model.params()[i];
                model.params_mut()[i] = orig + H;
                let up = batch_loss(&model, &batch, &loss)?;
                model.params_mut()[i] = orig - H;
                let down = batch_loss(&model, &batch, &loss)?;
                model.params_mut()[i] = orig;
                let e = rel_err(grad[i], (up - down) / (2.0 * H));
                worst = worst.max(e);
                failures += (e >= 1e-4) as usize;
                done += 1;
            }
        }
        out.push(SuiteReport {
            name: format!("gradient {name}"),
            checked: done,
            failures,
            detail: format!("max rel error {worst:.2e}"),
        });
    }
    Ok(out)
}

/// Binomial head outputs over random success probabilities and class
/// counts.
pub fn binomial_fuzz(draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..draws {
        let k = rng.gen_range(2..=20);
        let raw = rng.gen_range(-30.0..30.0);
        if let Output::Distribution(p) = apply(&HeadKind::Binomial { k }, &[raw]) {
            failures += !p.is_unimodal() as usize;
        }
    }
    Ok(SuiteReport { name: "binomial head fuzz".into(), checked: draws, failures, detail: String::new() })
}

/// A softmax output that is not unimodal, found by running random
/// networks on random inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxWitness {
    pub spec: MlpSpec,
    pub x: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn find_non_unimodal_softmax(k: usize, trials: usize, seed: u64) -> Result<Option<SoftmaxWitness>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let spec = MlpSpec { input_dim: 4, hidden: vec![8], activation: Activation::Relu, head: HeadKind::Softmax { k }, seed: seed + t as u64 };
        let model = Mlp::new(spec.clone())?;
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if let Output::Distribution(p) = model.forward(&x)? {
            if !p.is_unimodal() {
                return Ok(Some(SoftmaxWitness { spec, x, probs: p.into_inner() }));
            }
        }
    }
    Ok(None)
}

/// Random searches for non-unimodal POM (k = 5) and softmax (k = 5)
/// outputs; each must find one.
pub fn witness_search(trials: usize, seed: u64) -> Result<SuiteReport> {
    let pom = find_non_unimodal_pom(5, trials, seed)?;
    let sm = find_non_unimodal_softmax(5, trials, seed)?;
    let mut detail = String::new();
    if let Some(w) = &pom {
        detail += &format!("pom {:?}; ", w.probs.as_slice());
    }
    if let Some(w) = &sm {
        detail += &format!("softmax {:?}", w.probs);
    }
    Ok(SuiteReport {
        name: "non-unimodal witnesses".into(),
        checked: 2,
        failures: pom.is_none() as usize + sm.is_none() as usize,
        detail,
    })
}

/// Two outputs with equal cross entropy whose transport losses differ by
/// 0.1.
pub fn ce_invariance() -> Result<SuiteReport> {
    let a = Output::Distribution(ProbVector::new(vec![0.5, 0.2, 0.3])?);
    let b = Output::Distribution(ProbVector::new(vec![0.5, 0.3, 0.2])?);
    let y = Target::Class(1);
    let ot = LossKind::OptimalTransport { m: 1.0 };
    let ce_gap = (loss(&LossKind::CrossEntropy, &a, &y)? - loss(&LossKind::CrossEntropy, &b, &y)?).abs();
    let (oa, ob) = (loss(&ot, &a, &y)?, loss(&ot, &b, &y)?);
    let ok = ce_gap <= 1e-12 && ((oa - ob) - 0.1).abs() <= 1e-12;
    Ok(SuiteReport {
        name: "cross-entropy invariance".into(),
        checked: 1,
        failures: !ok as usize,
        detail: format!("CE gap {ce_gap:.1e}, OT {oa} vs {ob}"),
    })
}

/// Every suite at the given sizes.
pub fn run_all(sizes: &VerifySizes, seed: u64) -> Result<Vec<SuiteReport>> {
    let mut out = vec![
        lemma_fuzz(sizes.lemma_draws, seed)?,
        lemma_proof_check(sizes.lemma_proof_draws, seed)?,
        ot_oracle_check(sizes.ot_draws, seed)?,
    ];
    out.extend(gradient_check(sizes.grad_probes, seed)?);
    out.push(binomial_fuzz(sizes.binomial_draws, seed)?);
    out.push(witness_search(sizes.witness_trials, seed)?);
    out.push(ce_invariance()?);
    Ok(out)
}
