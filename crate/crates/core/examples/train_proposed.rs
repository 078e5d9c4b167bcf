//! Trains the unimodal network with the transport loss on one Abalone
//! split, saves a checkpoint, reloads it and evaluates on the test part.
//!
//! Usage: `cargo run --release --example train_proposed -- [abalone.csv] [epochs]`

use unimodal_ordinal::bench::{load_dataset, make_splits, train_method, ExperimentConfig, MethodSpec};
use unimodal_ordinal::checkpoint;
use unimodal_ordinal::metrics::evaluate;

fn main() -> unimodal_ordinal::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = Some(args.next().unwrap_or_else(|| "data/abalone.csv".into()).into());
    cfg.train.epochs = args.next().and_then(|e| e.parse().ok()).unwrap_or(50);
    cfg.seeds = Some(vec![1]);

    let ds = load_dataset(&cfg)?;
    let (seed, split) = make_splits(&cfg, &ds)?.remove(0);
    let prep = ds.prepare(&split)?;
    let (model, curve) = train_method(&cfg, &MethodSpec::preset("proposed")?, &prep, ds.k, seed)?;
    println!("{} epochs, final training loss {:.4}", curve.len(), curve.last().copied().unwrap_or(f64::NAN));

    let path = std::env::temp_dir().join("proposed_seed1.ckpt");
    checkpoint::save(&path, &model)?;
    let reloaded = checkpoint::load(&path)?;
    let e = evaluate(reloaded.as_model(), &prep.test.x, &prep.test.y)?;
    println!("checkpoint {}", path.display());
    println!(
        "test MAE {:.4}, unimodal rate {:?}, entropy ratio {:?}, mean scale {:?}",
        e.mae, e.unimodal_rate, e.entropy_ratio, e.mean_scale
    );
    Ok(())
}
