//! The `ordbench` command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::bench::config::{ExperimentConfig, MethodEntry};
use crate::bench::report::{emit_report, ensure_writable, load_report, render_table};
use crate::bench::run::{load_dataset, make_splits, run_benchmark, train_method};
use crate::bench::verify::{run_all, VerifySizes};
use crate::checkpoint;
use crate::data::{class_counts, splits_to_string};
use crate::error::{config, Error, Result};
use crate::metrics::evaluate;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "ORDBENCH_OUT";
pub const DEFAULT_OUT: &str = "ordbench-out";

#[derive(Debug, Parser)]
#[command(name = "ordbench", version, about = "Ordinal regression benchmark on tabular data")]
struct Cli {
    /// Experiment configuration (TOML). Every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config file and $ORDBENCH_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset path; overrides `data.path` of the config.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Comma-separated seeds, e.g. 1,2,3.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and bin the data, draw the splits and cache them.
    Prepare,
    /// Train one method for every seed and save checkpoints.
    Train {
        #[arg(long)]
        method: String,
    },
    /// Run the full method grid and write the report.
    Bench,
    /// Re-render the report files from a previous `bench` output directory.
    Report,
    /// Run the randomized self-checks.
    Verify {
        /// Use the full trial counts instead of the quick ones.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &cli.data {
        cfg.data.path = Some(d.clone());
    }
    if let Some(s) = &cli.seeds {
        cfg.n_trials = s.len();
        cfg.seeds = Some(s.clone());
    }
    Ok(cfg)
}

/// `--out`, then the config file, then `$ORDBENCH_OUT`, then
/// `ordbench-out`.
fn out_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn require_data(cfg: &ExperimentConfig) -> std::result::Result<(), Failure> {
    if cfg.data.path.is_none() {
        return Err(Failure::Usage("no dataset: pass --data <path> or set data.path in --config".into()));
    }
    Ok(())
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn prepare(cli: &Cli) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli)?;
    require_data(&cfg)?;
    let out = out_dir(cli, &cfg);
    ensure_writable(&out)?;
    let ds = load_dataset(&cfg)?;
    cfg.validate(ds.k)?;
    let splits: BTreeMap<u64, _> = make_splits(&cfg, &ds)?.into_iter().collect();
    std::fs::write(out.join("splits.txt"), splits_to_string(ds.len(), &splits))?;
    let counts = class_counts(&ds.y, ds.k);
    let summary = format!(
        "rows {}\nfeatures {}\nclasses {}\nclass_counts {}\n",
        ds.len(),
        ds.feature_names.join(","),
        ds.k,
        counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    );
    std::fs::write(out.join("dataset.txt"), &summary)?;
    print!("{summary}");
    println!("splits for seeds {:?} written to {}", cfg.seeds(), out.join("splits.txt").display());
    Ok(())
}

fn train(cli: &Cli, method: &str) -> std::result::Result<(), Failure> {
    let mut cfg = load_config(cli)?;
    require_data(&cfg)?;
    let spec = match cfg.methods()?.into_iter().find(|m| m.name == method) {
        Some(m) => m,
        None => crate::bench::config::MethodSpec::preset(method).map_err(|e| Failure::Usage(e.to_string()))?,
    };
    cfg.methods = vec![MethodEntry::Custom(spec.clone())];
    let out = out_dir(cli, &cfg);
    ensure_writable(&out)?;
    let ds = load_dataset(&cfg)?;
    cfg.validate(ds.k)?;
    for (seed, split) in make_splits(&cfg, &ds)? {
        let prep = ds.prepare(&split)?;
        let (model, _) = train_method(&cfg, &spec, &prep, ds.k, seed)?;
        let eval = evaluate(model.as_model(), &prep.test.x, &prep.test.y)?;
        let path = out.join(format!("{}_seed{seed}.ckpt", spec.name));
        checkpoint::save(&path, &model)?;
        println!("{} seed {seed}: test MAE {:.4}, checkpoint {}", spec.name, eval.mae, path.display());
        println!("{}", serde_json::to_string(&eval).map_err(|e| config(e.to_string()))?);
    }
    Ok(())
}

fn bench(cli: &Cli) -> std::result::Result<bool, Failure> {
    let cfg = load_config(cli)?;
    require_data(&cfg)?;
    let out = out_dir(cli, &cfg);
    ensure_writable(&out)?;
    let ds = load_dataset(&cfg)?;
    let (report, timings) = run_benchmark(&cfg, &ds, jobs(cli))?;
    emit_report(&report, &out, Some(&timings))?;
    print!("{}", render_table(&report));
    println!("report written to {}", out.display());
    Ok(!report.partial)
}

fn report(cli: &Cli) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli)?;
    let out = out_dir(cli, &cfg);
    let r = load_report(&out)?;
    emit_report(&r, &out, None)?;
    print!("{}", render_table(&r));
    Ok(())
}

fn verify(full: bool, seed: u64) -> std::result::Result<bool, Failure> {
    let sizes = if full { VerifySizes::full() } else { VerifySizes::quick() };
    let suites = run_all(&sizes, seed)?;
    for s in &suites {
        let tag = if s.passed() { "PASS" } else { "FAIL" };
        println!("[{tag}] {} ({} checked, {} failed) {}", s.name, s.checked, s.failures, s.detail);
    }
    Ok(suites.iter().all(|s| s.passed()))
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 on a failed run or check, 2 on a usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let res = match &cli.command {
        Command::Prepare => prepare(&cli).map(|_| true),
        Command::Train { method } => train(&cli, method).map(|_| true),
        Command::Bench => bench(&cli),
        Command::Report => report(&cli).map(|_| true),
        Command::Verify { full, seed } => verify(*full, *seed),
    };
    match res {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let _ = <Cli as clap::CommandFactory>::command().print_help();
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Exposed for tests: the output directory `argv` would use.
pub fn resolve_out_dir(argv: &[&str]) -> Option<PathBuf> {
    let cli = Cli::try_parse_from(argv).ok()?;
    let cfg = load_config(&cli).ok()?;
    Some(out_dir(&cli, &cfg))
}
