//! Report files written into an output directory.
//!
//! | file | columns |
//! |------|---------|
//! | `report.json` | the full [`RunReport`] |
//! | `runs.csv` | `method,seed,status,mae,unimodal_rate,entropy_ratio,mean_entropy_correct,mean_entropy_incorrect,mean_mode_prob_correct,mean_mode_prob_incorrect,mean_scale,n_test,n_correct,error` |
//! | `aggregates.csv` | `method,n_runs,n_failed` then `<metric>_mean,<metric>_std` for each metric of `runs.csv` from `mae` to `mean_scale` |
//! | `table.txt` | human-readable summary |
//! | `hist/<method>_correct.csv`, `hist/<method>_incorrect.csv` | `bin,count`: 20 rows, `bin` is the lower edge, counts summed over seeds |
//! | `curves.csv` | `method,seed,step,train_loss` |
//! | `timings.csv` | `method,seed,seconds` (not reproducible, not re-rendered) |
//!
//! Empty cells mean "absent" (a failed run, or a metric undefined for that
//! method).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::run::{aggregate, Aggregate, RunReport, Stat, Timing};
use crate::error::{config, Error, Result};
use crate::tol::HIST_BINS;

pub const RUN_COLUMNS: [&str; 14] = [
    "method",
    "seed",
    "status",
    "mae",
    "unimodal_rate",
    "entropy_ratio",
    "mean_entropy_correct",
    "mean_entropy_incorrect",
    "mean_mode_prob_correct",
    "mean_mode_prob_incorrect",
    "mean_scale",
    "n_test",
    "n_correct",
    "error",
];

const METRICS: [&str; 6] = ["mae", "unimodal_rate", "entropy_ratio", "mean_mode_prob_correct", "mean_mode_prob_incorrect", "mean_scale"];

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Creates `dir` and checks a file can be written there. Call before any
/// training so a bad path fails fast.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".ordbench-write-test");
    fs::write(&probe, b"").map_err(|e| io_err(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| io_err(&probe, e))?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| config(format!("csv: {e}"));
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(&r).map_err(map)?;
    }
    w.into_inner().map_err(|e| config(format!("csv: {e}")))
}

fn stat_cells(s: &Option<Stat>) -> [String; 2] {
    match s {
        Some(s) => [s.mean.to_string(), s.std.to_string()],
        None => [String::new(), String::new()],
    }
}

fn agg_stats(a: &Aggregate) -> [&Option<Stat>; 6] {
    [&a.mae, &a.unimodal_rate, &a.entropy_ratio, &a.mean_mode_prob_correct, &a.mean_mode_prob_incorrect, &a.mean_scale]
}

pub fn runs_csv(report: &RunReport) -> Result<Vec<u8>> {
    let rows = report
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![r.method.clone(), r.seed.to_string()];
            match &r.eval {
                Some(e) => row.extend([
                    "ok".into(),
                    e.mae.to_string(),
                    opt(e.unimodal_rate),
                    opt(e.entropy_ratio),
                    opt(e.mean_entropy_correct),
                    opt(e.mean_entropy_incorrect),
                    opt(e.mean_mode_prob_correct),
                    opt(e.mean_mode_prob_incorrect),
                    opt(e.mean_scale),
                    e.n.to_string(),
                    e.n_correct.to_string(),
                    String::new(),
                ]),
                None => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat_n(String::new(), 10));
                    row.push(r.error.clone().unwrap_or_default());
                }
            }
            row
        })
        .collect();
    csv_bytes(&RUN_COLUMNS, rows)
}

pub fn aggregates_csv(aggs: &[Aggregate]) -> Result<Vec<u8>> {
    let mut header = vec!["method".to_string(), "n_runs".into(), "n_failed".into()];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = aggs
        .iter()
        .map(|a| {
            let mut row = vec![a.method.clone(), a.n_runs.to_string(), a.n_failed.to_string()];
            for s in agg_stats(a) {
                row.extend(stat_cells(s));
            }
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

fn pm(s: &Option<Stat>, scale: f64, digits: usize) -> String {
    match s {
        Some(s) => format!("{:.digits$} ± {:.digits$}", s.mean * scale, s.std * scale),
        None => "-".into(),
    }
}

pub fn render_table(report: &RunReport) -> String {
    let mut t = String::new();
    let seeds = report.config.seeds();
    let _ = writeln!(t, "Test-split results, mean ± std over {} seeds {:?} ({} rows, k = {})", seeds.len(), seeds, report.n_rows, report.k);
    let _ = writeln!(t, "config digest {}", report.config_digest);
    if report.partial {
        let _ = writeln!(t, "PARTIAL: some runs failed, see runs.csv");
    }
    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "{:<20} {:>15} {:>17} {:>16} {:>16} {:>7}",
        "Method", "MAE", "% unimodal", "entropy ratio", "mean sigma", "failed"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            t,
            "{:<20} {:>15} {:>17} {:>16} {:>16} {:>7}",
            a.method,
            pm(&a.mae, 1.0, 3),
            pm(&a.unimodal_rate, 100.0, 1),
            pm(&a.entropy_ratio, 1.0, 2),
            pm(&a.mean_scale, 1.0, 4),
            a.n_failed
        );
    }
    let _ = writeln!(t, "\nEntropy in {}.", report.entropy_units);
    t
}

/// Mode-probability histograms of a method summed over its seeds; `None`
/// if no run produced distributions.
pub fn method_histograms(report: &RunReport, method: &str) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut found = false;
    let (mut c, mut i) = (vec![0; HIST_BINS], vec![0; HIST_BINS]);
    for r in report.runs.iter().filter(|r| r.method == method) {
        if let Some(h) = r.eval.as_ref().and_then(|e| e.mode_hist.as_ref()) {
            found = true;
            c.iter_mut().zip(&h.correct).for_each(|(a, b)| *a += b);
            i.iter_mut().zip(&h.incorrect).for_each(|(a, b)| *a += b);
        }
    }
    found.then_some((c, i))
}

fn hist_csv(counts: &[usize]) -> Result<Vec<u8>> {
    let rows = counts
        .iter()
        .enumerate()
        .map(|(b, n)| vec![format!("{:.2}", b as f64 / HIST_BINS as f64), n.to_string()])
        .collect();
    csv_bytes(&["bin", "count"], rows)
}

fn curves_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for r in &report.runs {
        for (step, l) in r.curve.iter().enumerate() {
            rows.push(vec![r.method.clone(), r.seed.to_string(), (step + 1).to_string(), l.to_string()]);
        }
    }
    csv_bytes(&["method", "seed", "step", "train_loss"], rows)
}

pub fn timings_csv(timings: &[Timing]) -> Result<Vec<u8>> {
    let rows = timings
        .iter()
        .map(|t| vec![t.method.clone(), t.seed.to_string(), format!("{:.3}", t.seconds)])
        .collect();
    csv_bytes(&["method", "seed", "seconds"], rows)
}

fn write(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
    written.push(p);
    Ok(())
}

/// Writes every report file into `dir`; `timings.csv` only when `timings`
/// is given. Returns the paths written.
pub fn emit_report(report: &RunReport, dir: &Path, timings: Option<&[Timing]>) -> Result<Vec<PathBuf>> {
    ensure_writable(dir)?;
    let hist_dir = dir.join("hist");
    fs::create_dir_all(&hist_dir).map_err(|e| io_err(&hist_dir, e))?;
    let mut written = Vec::new();
    let json = serde_json::to_vec_pretty(report).map_err(|e| config(e.to_string()))?;
    write(dir, "report.json", &json, &mut written)?;
    write(dir, "runs.csv", &runs_csv(report)?, &mut written)?;
    write(dir, "aggregates.csv", &aggregates_csv(&report.aggregates)?, &mut written)?;
    write(dir, "table.txt", render_table(report).as_bytes(), &mut written)?;
    write(dir, "curves.csv", &curves_csv(report)?, &mut written)?;
    for a in &report.aggregates {
        if let Some((c, i)) = method_histograms(report, &a.method) {
            write(&hist_dir, &format!("{}_correct.csv", a.method), &hist_csv(&c)?, &mut written)?;
            write(&hist_dir, &format!("{}_incorrect.csv", a.method), &hist_csv(&i)?, &mut written)?;
        }
    }
    if let Some(t) = timings {
        write(dir, "timings.csv", &timings_csv(t)?, &mut written)?;
    }
    Ok(written)
}

/// Reads `report.json` from `dir` and checks its aggregates against its
/// run rows.
pub fn load_report(dir: &Path) -> Result<RunReport> {
    let p = dir.join("report.json");
    let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
    let report: RunReport = serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    if aggregate(&report.runs) != report.aggregates {
        return Err(config(format!("{}: aggregates do not match the run rows", p.display())));
    }
    if report.partial != report.runs.iter().any(|r| r.eval.is_none()) {
        return Err(config(format!("{}: partial flag disagrees with the run rows", p.display())));
    }
    Ok(report)
}
