//! Fits a proportional odds model, then searches random parameters for an
//! input whose class distribution has two peaks.

use unimodal_ordinal::pom::{find_non_unimodal_pom, pom_class_probs, pom_fit, PomFitOptions, PomParams};

fn main() -> unimodal_ordinal::Result<()> {
    // one feature; labels cut from the feature plus a fixed jitter so the
    // classes overlap and the likelihood has a finite maximum
    let x: Vec<f64> = (0..300).map(|i| -3.0 + 6.0 * i as f64 / 299.0).collect();
    let y: Vec<usize> = x
        .iter()
        .enumerate()
        .map(|(i, v)| v + 1.5 * (i as f64 * 12.9898).sin())
        .map(|z| if z < -1.0 { 1 } else if z < 1.0 { 2 } else { 3 })
        .collect();
    let fit = pom_fit(&x, 1, &y, 3, &PomFitOptions::default())?;
    println!(
        "fit: thresholds {:.3?} weight {:.3?} mean log-likelihood {:.4} after {} iterations",
        fit.params.thresholds(),
        fit.params.weights(),
        fit.log_likelihood,
        fit.iterations
    );

    let tight = PomParams::new(vec![-2.0, -1.9, 1.9, 2.0], vec![1.0])?;
    println!("closely spaced thresholds at x = 0: {:.4?}", pom_class_probs(&tight, &[0.0])?.as_slice());

    match find_non_unimodal_pom(5, 100_000, 1)? {
        Some(w) => println!("random search: x = {:.3?} gives {:.4?}", w.x, w.probs.as_slice()),
        None => println!("random search found nothing"),
    }
    Ok(())
}
