use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::config::{DataFormat, ExperimentConfig, MethodSpec, ModelChoice};
use crate::checkpoint::Checkpoint;
use crate::data::{self, OrdinalDataset, Prepared, Split};
use crate::error::{config, Result};
use crate::metrics::{evaluate, EvalResult};
use crate::model::OrdinalModel;
use crate::nn::{fit, Mlp, MlpSpec, Samples, Target};
use crate::pom::pom_fit;
use crate::soft_targets::make_soft_target;

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<OrdinalDataset> {
    let d = &cfg.data;
    let path = d.path.as_ref().ok_or_else(|| config("no dataset path given"))?;
    match d.format {
        DataFormat::Abalone => {
            let rows = data::load_abalone(path, d.has_header)?;
            OrdinalDataset::from_abalone(&rows, &d.ring_edges, d.sex)
        }
        DataFormat::Labeled => {
            let k = d.k.ok_or_else(|| config("a labelled dataset needs `data.k`"))?;
            data::parse_labeled(&std::fs::read_to_string(path)?, k, d.sex)
        }
    }
}

impl Checkpoint {
    pub fn as_model(&self) -> &dyn OrdinalModel {
        match self {
            Checkpoint::Mlp(m) => m,
            Checkpoint::Pom(p) => p,
        }
    }
}

/// Trains one method on the training part of `prep`. Returns the model and
/// its training curve (per-epoch mean loss; negative mean log-likelihood per
/// iteration for the POM).
pub fn train_method(cfg: &ExperimentConfig, method: &MethodSpec, prep: &Prepared, k: usize, seed: u64) -> Result<(Checkpoint, Vec<f64>)> {
    let tr = &prep.train;
    match &method.model {
        ModelChoice::Pom => {
            let f = pom_fit(&tr.x, tr.dim, &tr.y, k, &cfg.pom)?;
            let curve = f.trace.iter().map(|ll| -ll).collect();
            Ok((Checkpoint::Pom(f.params), curve))
        }
        ModelChoice::Net { head, loss, soft_target } => {
            let targets: Vec<Target> = match soft_target {
                Some(st) => tr
                    .y
                    .iter()
                    .map(|&y| make_soft_target(st, y, k).map(Target::Soft))
                    .collect::<Result<_>>()?,
                None => tr.y.iter().map(|&y| Target::Class(y)).collect(),
            };
            let spec = MlpSpec {
                input_dim: tr.dim,
                hidden: cfg.model.hidden.clone(),
                activation: cfg.model.activation,
                head: head.with_k(k),
                seed,
            };
            let mut model = Mlp::new(spec)?;
            let train_cfg = crate::nn::TrainConfig { seed, ..cfg.train.clone() };
            let stats = fit(&mut model, &Samples::new(&tr.x, tr.dim, &targets)?, loss, &train_cfg)?;
            Ok((Checkpoint::Mlp(model), stats.iter().map(|s| s.train_loss).collect()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    /// Test-split metrics; absent when the run failed.
    pub eval: Option<EvalResult>,
    pub error: Option<String>,
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub n_runs: usize,
    pub n_failed: usize,
    pub mae: Option<Stat>,
    pub unimodal_rate: Option<Stat>,
    pub entropy_ratio: Option<Stat>,
    pub mean_mode_prob_correct: Option<Stat>,
    pub mean_mode_prob_incorrect: Option<Stat>,
    pub mean_scale: Option<Stat>,
}

/// Mean and spread per method, in order of first appearance.
pub fn aggregate(runs: &[RunRecord]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    order
        .into_iter()
        .map(|m| {
            let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.method == m).collect();
            let evals: Vec<&EvalResult> = rs.iter().filter_map(|r| r.eval.as_ref()).collect();
            let col = |f: &dyn Fn(&EvalResult) -> Option<f64>| Stat::of(&evals.iter().filter_map(|e| f(e)).collect::<Vec<_>>());
            Aggregate {
                method: m.to_string(),
                n_runs: rs.len(),
                n_failed: rs.len() - evals.len(),
                mae: col(&|e| Some(e.mae)),
                unimodal_rate: col(&|e| e.unimodal_rate),
                entropy_ratio: col(&|e| e.entropy_ratio),
                mean_mode_prob_correct: col(&|e| e.mean_mode_prob_correct),
                mean_mode_prob_incorrect: col(&|e| e.mean_mode_prob_incorrect),
                mean_scale: col(&|e| e.mean_scale),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub k: usize,
    pub n_rows: usize,
    pub entropy_units: String,
    /// Set when at least one run failed.
    pub partial: bool,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Wall-clock seconds of one run; kept apart from the report so reports
/// stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub method: String,
    pub seed: u64,
    pub seconds: f64,
}

/// Splits for every configured seed. Every method of a seed uses the same
/// one.
pub fn make_splits(cfg: &ExperimentConfig, ds: &OrdinalDataset) -> Result<Vec<(u64, Split)>> {
    cfg.seeds().into_iter().map(|s| Ok((s, data::split(&ds.y, ds.k, &cfg.split, s)?))).collect()
}

/// Runs every method for every seed on `ds` using `jobs` worker threads.
/// Failed runs are recorded, not propagated.
pub fn run_benchmark(cfg: &ExperimentConfig, ds: &OrdinalDataset, jobs: usize) -> Result<(RunReport, Vec<Timing>)> {
    cfg.validate(ds.k)?;
    let methods = cfg.methods()?;
    let prepared: Vec<(u64, Prepared)> = make_splits(cfg, ds)?
        .into_iter()
        .map(|(s, sp)| Ok((s, ds.prepare(&sp)?)))
        .collect::<Result<_>>()?;
    let grid: Vec<(&MethodSpec, u64, &Prepared)> = methods
        .iter()
        .flat_map(|m| prepared.iter().map(move |(s, p)| (m, *s, p)))
        .collect();
    let run_one = |&(m, seed, prep): &(&MethodSpec, u64, &Prepared)| {
        let t0 = Instant::now();
        let res = train_method(cfg, m, prep, ds.k, seed)
            .and_then(|(model, curve)| Ok((evaluate(model.as_model(), &prep.test.x, &prep.test.y)?, curve)));
        let seconds = t0.elapsed().as_secs_f64();
        let record = match res {
            Ok((eval, curve)) => {
                log::info!("{} seed {seed}: test MAE {:.4} ({seconds:.1}s)", m.name, eval.mae);
                RunRecord { method: m.name.clone(), seed, eval: Some(eval), error: None, curve }
            }
            Err(e) => {
                log::error!("{} seed {seed} failed: {e}", m.name);
                RunRecord { method: m.name.clone(), seed, eval: None, error: Some(e.to_string()), curve: Vec::new() }
            }
        };
        (record, Timing { method: m.name.clone(), seed, seconds })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(RunRecord, Timing)> = pool.install(|| grid.par_iter().map(run_one).collect());
    let (runs, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let report = RunReport {
        config_digest: cfg.digest(),
        config: cfg.clone(),
        k: ds.k,
        n_rows: ds.len(),
        entropy_units: "nats".into(),
        partial: runs.iter().any(|r| r.eval.is_none()),
        aggregates: aggregate(&runs),
        runs,
    };
    Ok((report, timings))
}
