use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unimodal_ordinal::data::{load_abalone, OrdinalDataset, SexEncoding, Standardizer, DEFAULT_RING_EDGES};
use unimodal_ordinal::pom::{pom_class_probs, pom_fit, pom_log_likelihood, PomFitOptions, PomParams};

/// Rows drawn from a known model: standard normal features (Box–Muller)
/// and labels sampled from the model's class probabilities.
fn synthetic(truth: &PomParams, n: usize, seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = truth.dim();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
                (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
            })
            .collect();
        let p = pom_class_probs(truth, &row).unwrap();
        let mut u: f64 = rng.gen();
        let mut c = p.k();
        for (i, pi) in p.as_slice().iter().enumerate() {
            if u < *pi {
                c = i + 1;
                break;
            }
            u -= pi;
        }
        x.extend(row);
        y.push(c);
    }
    (x, y)
}

#[test]
fn recovers_generating_parameters() {
    let truth = PomParams::new(vec![-0.5, 1.0], vec![1.0, -0.5]).unwrap();
    let (x, y) = synthetic(&truth, 10_000, 11);
    let fit = pom_fit(&x, 2, &y, 3, &PomFitOptions::default()).unwrap();
    assert!(fit.converged);
    for (got, want) in fit.params.weights().iter().zip(truth.weights()) {
        assert!((got - want).abs() < 0.1, "weights {:?}", fit.params.weights());
    }
    for (got, want) in fit.params.thresholds().iter().zip(truth.thresholds()) {
        assert!((got - want).abs() < 0.1, "thresholds {:?}", fit.params.thresholds());
    }
    // the maximizer beats the generating parameters on its own sample
    assert!(fit.log_likelihood >= pom_log_likelihood(&truth, &x, &y).unwrap());
}

#[test]
fn likelihood_never_decreases() {
    let truth = PomParams::new(vec![-1.0, 0.0, 0.7, 2.0], vec![0.8, 0.3, -1.2]).unwrap();
    let (x, y) = synthetic(&truth, 2_000, 5);
    let fit = pom_fit(&x, 3, &y, 5, &PomFitOptions::default()).unwrap();
    assert!(fit.trace.len() > 10);
    for w in fit.trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-10, "{} -> {}", w[0], w[1]);
    }
    assert_eq!(*fit.trace.last().unwrap(), fit.log_likelihood);
}

#[test]
fn row_order_does_not_matter() {
    let truth = PomParams::new(vec![-0.3, 0.9], vec![0.6, -1.1]).unwrap();
    let (x, y) = synthetic(&truth, 3_000, 9);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let xp: Vec<f64> = order.iter().flat_map(|&i| x[2 * i..2 * i + 2].to_vec()).collect();
    let yp: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let opts = PomFitOptions::default();
    let (a, b) = (pom_fit(&x, 2, &y, 3, &opts).unwrap(), pom_fit(&xp, 2, &yp, 3, &opts).unwrap());
    for (u, v) in a.params.weights().iter().zip(b.params.weights()) {
        assert!((u - v).abs() < 1e-4, "{u} vs {v}");
    }
    assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-8);
}

/// Reference maximum-likelihood fit of the full Abalone file (7 z-scored
/// measurements, default ring bins) computed independently with
/// statsmodels' `OrderedModel(distr="logit")` and BFGS.
const REF_MEAN_LL: f64 = -1.6427548789650144;
const REF_WEIGHTS: [f64; 7] = [0.13709196, 1.20273684, 0.73538624, 2.92195354, -3.26345269, -0.65621227, 0.83480641];

#[test]
fn abalone_fit_matches_reference_solver() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/abalone.csv");
    let rows = load_abalone(path.as_ref(), true).unwrap();
    let ds = OrdinalDataset::from_abalone(&rows, &DEFAULT_RING_EDGES, SexEncoding::Drop).unwrap();
    let all: Vec<usize> = (0..ds.len()).collect();
    let sub = ds.subset(&all, &Standardizer::fit(&ds, &all).unwrap());
    let fit = pom_fit(&sub.x, sub.dim, &sub.y, ds.k, &PomFitOptions::default()).unwrap();
    assert!(fit.log_likelihood > REF_MEAN_LL - 1e-6, "{} vs {REF_MEAN_LL}", fit.log_likelihood);
    for (got, want) in fit.params.weights().iter().zip(REF_WEIGHTS) {
        assert!((got - want).abs() < 0.05, "{:?}", fit.params.weights());
    }
}
