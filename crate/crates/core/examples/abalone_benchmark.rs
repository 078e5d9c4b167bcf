//! A shortened version of the full method grid: every method, two seeds,
//! few epochs. Writes the report files to a temporary directory.
//!
//! Usage: `cargo run --release --example abalone_benchmark -- [abalone.csv]`

use unimodal_ordinal::bench::{emit_report, load_dataset, render_table, run_benchmark, ExperimentConfig};

fn main() -> unimodal_ordinal::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = Some(std::env::args().nth(1).unwrap_or_else(|| "data/abalone.csv".into()).into());
    cfg.train.epochs = 20;
    cfg.train.lr_decay_epochs = 10;
    cfg.n_trials = 2;

    let ds = load_dataset(&cfg)?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (report, timings) = run_benchmark(&cfg, &ds, jobs)?;
    let out = std::env::temp_dir().join("ordbench-example");
    emit_report(&report, &out, Some(&timings))?;
    print!("{}", render_table(&report));
    println!("files in {}", out.display());
    Ok(())
}
