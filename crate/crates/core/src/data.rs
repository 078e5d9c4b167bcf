//! Abalone ingestion, ring binning, seeded splits and train-only
//! standardization.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};

/// Column names of the UCI Abalone file, in order.
pub const ABALONE_COLUMNS: [&str; 9] = [
    "sex",
    "length",
    "diameter",
    "height",
    "whole_weight",
    "shucked_weight",
    "viscera_weight",
    "shell_weight",
    "rings",
];

/// Upper-inclusive ring cuts giving 8 classes with counts between 391 and
/// 689 on the full 4177-row UCI file: `<=6, 7, 8, 9, 10, 11, 12..=13, >=14`.
pub const DEFAULT_RING_EDGES: [i64; 7] = [6, 7, 8, 9, 10, 11, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
    Infant,
}

impl Sex {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "M" | "m" => Some(Sex::Male),
            "F" | "f" => Some(Sex::Female),
            "I" | "i" => Some(Sex::Infant),
            _ => None,
        }
    }

    fn one_hot(self) -> [f64; 3] {
        match self {
            Sex::Male => [1.0, 0.0, 0.0],
            Sex::Female => [0.0, 1.0, 0.0],
            Sex::Infant => [0.0, 0.0, 1.0],
        }
    }
}

/// One row of the raw Abalone table.
#[derive(Debug, Clone, PartialEq)]
pub struct AbaloneRecord {
    pub sex: Sex,
    pub measurements: [f64; 7],
    pub rings: i64,
}

/// How the categorical `sex` column becomes features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SexEncoding {
    /// 7 numeric features.
    #[default]
    Drop,
    /// 3 indicator columns followed by the 7 measurements.
    OneHot,
}

fn parse_err(line: u64, msg: String) -> Error {
    Error::Parse { line: line as usize, msg }
}

fn reader(text: &str, has_header: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Parses the UCI layout: `sex` then 7 measurements then integer `rings`.
pub fn parse_abalone(text: &str, has_header: bool) -> Result<Vec<AbaloneRecord>> {
    let mut rdr = reader(text, has_header);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != ABALONE_COLUMNS.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", ABALONE_COLUMNS.len(), rec.len())));
        }
        let sex = Sex::parse(&rec[0])
            .ok_or_else(|| parse_err(line, format!("column `sex`: expected M, F or I, got {:?}", &rec[0])))?;
        let mut measurements = [0.0; 7];
        for (c, m) in measurements.iter_mut().enumerate() {
            let field = &rec[c + 1];
            *m = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("column `{}`: not a finite number: {field:?}", ABALONE_COLUMNS[c + 1])))?;
        }
        let rings = rec[8]
            .parse::<i64>()
            .map_err(|_| parse_err(line, format!("column `rings`: not an integer: {:?}", &rec[8])))?;
        out.push(AbaloneRecord { sex, measurements, rings });
    }
    if out.is_empty() {
        return Err(domain("abalone file contains no data rows"));
    }
    Ok(out)
}

pub fn load_abalone(path: &Path, has_header: bool) -> Result<Vec<AbaloneRecord>> {
    parse_abalone(&std::fs::read_to_string(path)?, has_header)
}

/// Maps ring counts to classes `1..=edges.len() + 1`; class `i` holds rings
/// in `(edges[i-2], edges[i-1]]`. Counts below 1 are not valid ages and are
/// clamped into the first class with a warning.
pub fn bin_rings(rings: &[i64], edges: &[i64]) -> Result<Vec<usize>> {
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config(format!("ring edges must be non-empty and strictly increasing: {edges:?}")));
    }
    let mut clamped = 0usize;
    let labels = rings
        .iter()
        .map(|&r| {
            if r < 1 {
                clamped += 1;
            }
            1 + edges.partition_point(|&e| e < r)
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} ring counts below 1 clamped into class 1");
    }
    Ok(labels)
}

/// Number of items in each class `1..=k`.
pub fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for &y in labels {
        c[y - 1] += 1;
    }
    c
}

/// Features in row-major order with labels in `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalDataset {
    pub x: Vec<f64>,
    pub y: Vec<usize>,
    pub k: usize,
    pub feature_names: Vec<String>,
}

impl OrdinalDataset {
    pub fn new(x: Vec<f64>, y: Vec<usize>, k: usize, feature_names: Vec<String>) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 || x.len() != y.len() * d {
            return Err(Error::LengthMismatch(x.len(), y.len() * d));
        }
        if y.is_empty() {
            return Err(domain("dataset has no rows"));
        }
        if let Some(bad) = y.iter().find(|&&c| c < 1 || c > k) {
            return Err(domain(format!("label {bad} outside 1..={k}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("features must be finite"));
        }
        Ok(Self { x, y, k, feature_names })
    }

    pub fn from_abalone(records: &[AbaloneRecord], edges: &[i64], sex: SexEncoding) -> Result<Self> {
        let rings: Vec<i64> = records.iter().map(|r| r.rings).collect();
        let y = bin_rings(&rings, edges)?;
        let mut names: Vec<String> = Vec::new();
        if sex == SexEncoding::OneHot {
            names.extend(["sex_m", "sex_f", "sex_i"].map(String::from));
        }
        names.extend(ABALONE_COLUMNS[1..8].iter().map(|s| s.to_string()));
        let mut x = Vec::with_capacity(records.len() * names.len());
        for r in records {
            if sex == SexEncoding::OneHot {
                x.extend(r.sex.one_hot());
            }
            x.extend(r.measurements);
        }
        Self::new(x, y, edges.len() + 1, names)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.x[i * d..(i + 1) * d]
    }

    /// Rows `idx` standardized with `stats`.
    pub fn subset(&self, idx: &[usize], stats: &Standardizer) -> Subset {
        let mut x = Vec::with_capacity(idx.len() * self.dim());
        for &i in idx {
            x.extend(stats.apply(self.row(i)));
        }
        Subset { x, y: idx.iter().map(|&i| self.y[i]).collect(), dim: self.dim() }
    }

    /// Standardizes with statistics of `split.train` only.
    pub fn prepare(&self, split: &Split) -> Result<Prepared> {
        let stats = Standardizer::fit(self, &split.train)?;
        Ok(Prepared {
            train: self.subset(&split.train, &stats),
            val: self.subset(&split.val, &stats),
            test: self.subset(&split.test, &stats),
            stats,
        })
    }
}

/// Reads a CSV with a header, a `label` column holding `1..=k` and numeric
/// feature columns. A `sex` column, if present, follows `sex`.
pub fn parse_labeled(text: &str, k: usize, sex: SexEncoding) -> Result<OrdinalDataset> {
    let mut rdr = reader(text, true);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| parse_err(1, "no `label` column in header".into()))?;
    let sex_col = header.iter().position(|h| h == "sex");
    let mut names = Vec::new();
    if sex_col.is_some() && sex == SexEncoding::OneHot {
        names.extend(["sex_m", "sex_f", "sex_i"].map(String::from));
    }
    let numeric: Vec<usize> = (0..header.len()).filter(|&c| c != label_col && Some(c) != sex_col).collect();
    names.extend(numeric.iter().map(|&c| header[c].clone()));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = line_of(&rec);
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let label: usize = rec[label_col]
            .parse()
            .ok()
            .filter(|c| (1..=k).contains(c))
            .ok_or_else(|| parse_err(line, format!("column `label`: expected 1..={k}, got {:?}", &rec[label_col])))?;
        if let Some(sc) = sex_col {
            let s = Sex::parse(&rec[sc])
                .ok_or_else(|| parse_err(line, format!("column `sex`: expected M, F or I, got {:?}", &rec[sc])))?;
            if sex == SexEncoding::OneHot {
                x.extend(s.one_hot());
            }
        }
        for &c in &numeric {
            let v = rec[c]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("column `{}`: not a finite number: {:?}", header[c], &rec[c])))?;
            x.push(v);
        }
        y.push(label);
    }
    if y.is_empty() {
        return Err(domain("labelled file contains no data rows"));
    }
    OrdinalDataset::new(x, y, k, names)
}

/// Per-feature mean and standard deviation from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of `train` rows. Constant features get unit
    /// scale so they map to zero.
    pub fn fit(data: &OrdinalDataset, train: &[usize]) -> Result<Self> {
        if train.is_empty() {
            return Err(domain("cannot standardize on an empty training split"));
        }
        let d = data.dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in train {
            for (m, v) in mean.iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in train {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((z, m), s)| z * s + m).collect()
    }
}

/// Standardized rows of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub x: Vec<f64>,
    pub y: Vec<usize>,
    pub dim: usize,
}

impl Subset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub train: Subset,
    pub val: Subset,
    pub test: Subset,
    pub stats: Standardizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1, test: 0.1, stratified: true }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(config(format!("split fractions must be positive and sum to 1, got {f:?}")));
        }
        Ok(())
    }
}

/// Row indices of each part, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn cut(mut idx: Vec<usize>, spec: &SplitSpec, rng: &mut ChaCha8Rng) -> [Vec<usize>; 3] {
    idx.shuffle(rng);
    let n = idx.len() as f64;
    let n_train = (n * spec.train).round() as usize;
    let n_val = ((n * spec.val).round() as usize).min(idx.len() - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    [idx, val, test]
}

/// Seeded split of `labels`' rows. Under stratification each class is cut
/// separately; if any class has fewer than 3 members, or the per-class cut
/// leaves the train or test part empty, the split falls back to an
/// unstratified one.
pub fn split(labels: &[usize], k: usize, spec: &SplitSpec, seed: u64) -> Result<Split> {
    spec.validate()?;
    if labels.len() < 3 {
        return Err(domain(format!("need at least 3 rows to split, got {}", labels.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    let counts = class_counts(labels, k);
    let stratify = spec.stratified && counts.iter().all(|&c| c == 0 || c >= 3);
    if spec.stratified && !stratify {
        log::warn!("a class has fewer than 3 members ({counts:?}); using an unstratified split");
    }
    if stratify {
        for class in 1..=k {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            for (p, chunk) in parts.iter_mut().zip(cut(members, spec, &mut rng)) {
                p.extend(chunk);
            }
        }
        // per-class rounding can starve a part on tiny data
        if parts[0].is_empty() || parts[2].is_empty() {
            log::warn!("stratified split left the train or test part empty ({counts:?}); using an unstratified split");
            parts = cut((0..labels.len()).collect(), spec, &mut ChaCha8Rng::seed_from_u64(seed));
        }
    } else {
        parts = cut((0..labels.len()).collect(), spec, &mut rng);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    if train.is_empty() || test.is_empty() {
        return Err(domain("split produced an empty train or test part"));
    }
    Ok(Split { train, val, test })
}

/// Text form of cached splits:
///
/// ```text
/// ordbench-splits 1
/// rows 4177
/// seed 1 train 0 3 4 ...
/// seed 1 val 7 ...
/// seed 1 test 2 ...
/// ```
pub fn splits_to_string(rows: usize, splits: &BTreeMap<u64, Split>) -> String {
    let mut out = format!("ordbench-splits 1\nrows {rows}\n");
    for (seed, s) in splits {
        for (name, idx) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
            let _ = write!(out, "seed {seed} {name}");
            for i in idx {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
    }
    out
}

/// Parses [`splits_to_string`] output and checks indices against `rows`.
pub fn splits_from_str(text: &str) -> Result<(usize, BTreeMap<u64, Split>)> {
    let mut lines = text.lines().enumerate();
    let bad = |n: usize, msg: &str| Error::Parse { line: n + 1, msg: msg.to_string() };
    match lines.next() {
        Some((_, "ordbench-splits 1")) => {}
        _ => return Err(bad(0, "not a split cache (expected `ordbench-splits 1`)")),
    }
    let rows: usize = match lines.next() {
        Some((n, l)) => l.strip_prefix("rows ").and_then(|v| v.parse().ok()).ok_or_else(|| bad(n, "expected `rows <n>`"))?,
        None => return Err(bad(1, "missing `rows` line")),
    };
    let mut parts: BTreeMap<u64, [Option<Vec<usize>>; 3]> = BTreeMap::new();
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let mut tok = l.split_whitespace();
        if tok.next() != Some("seed") {
            return Err(bad(n, "expected `seed <s> <part> <indices>`"));
        }
        let seed: u64 = tok.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(n, "bad seed"))?;
        let slot = match tok.next() {
            Some("train") => 0,
            Some("val") => 1,
            Some("test") => 2,
            _ => return Err(bad(n, "part must be train, val or test")),
        };
        let idx = tok
            .map(|t| t.parse::<usize>().ok().filter(|&i| i < rows))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad(n, "index not an integer below `rows`"))?;
        parts.entry(seed).or_default()[slot] = Some(idx);
    }
    let mut out = BTreeMap::new();
    for (seed, [tr, va, te]) in parts {
        match (tr, va, te) {
            (Some(train), Some(val), Some(test)) => {
                out.insert(seed, Split { train, val, test });
            }
            _ => return Err(Error::Parse { line: 0, msg: format!("seed {seed} is missing a part") }),
        }
    }
    Ok((rows, out))
}
