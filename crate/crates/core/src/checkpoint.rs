//! Plain-text model checkpoints.
//!
//! ```text
//! unimodal-ordinal-checkpoint 1
//! model mlp
//! input_dim 7
//! hidden 64,64
//! activation relu
//! head {"kind":"unimodal","k":8,"family":"normal"}
//! seed 1
//! params 5058
//! 0.0123
//! ...
//! ```
//!
//! A POM checkpoint has `model pom`, `dim`, `k`, then `thresholds` and
//! `weights` lines holding comma-separated values. Floats are written in
//! shortest round-trip form so a reload is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, HeadKind, Mlp, MlpSpec};
use crate::pom::PomParams;

pub const MAGIC: &str = "unimodal-ordinal-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Mlp(Mlp),
    Pom(PomParams),
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn mlp_to_string(model: &Mlp) -> String {
    let s = model.spec();
    let mut out = String::new();
    let hidden: Vec<String> = s.hidden.iter().map(|h| h.to_string()).collect();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "model mlp");
    let _ = writeln!(out, "input_dim {}", s.input_dim);
    let _ = writeln!(out, "hidden {}", hidden.join(","));
    let _ = writeln!(out, "activation {}", s.activation.name());
    let _ = writeln!(out, "head {}", serde_json::to_string(&s.head).expect("head serializes"));
    let _ = writeln!(out, "seed {}", s.seed);
    let _ = writeln!(out, "params {}", model.n_params());
    for p in model.params() {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn pom_to_string(params: &PomParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "model pom");
    let _ = writeln!(out, "dim {}", params.dim());
    let _ = writeln!(out, "k {}", params.k());
    let _ = writeln!(out, "thresholds {}", join(params.thresholds()));
    let _ = writeln!(out, "weights {}", join(params.weights()));
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l.trim_end())),
            None => Err(Error::Parse { line: 0, msg: "unexpected end of checkpoint".into() }),
        }
    }

    /// Reads `key value` and returns the value.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next_line()?;
        match l.split_once(' ').unwrap_or((l, "")) {
            (k, v) if k == key => Ok((n, v)),
            _ => Err(Error::Parse { line: n, msg: format!("expected `{key} <value>`, got {l:?}") }),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (n, v) = self.field(key)?;
        v.parse().map_err(|e| Error::Parse { line: n, msg: format!("{key}: {e}") })
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| s.trim().parse().map_err(|e| Error::Parse { line, msg: format!("{s:?}: {e}") }))
        .collect()
}

pub fn from_str(text: &str) -> Result<Checkpoint> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (n, header) = lines.next_line()?;
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim().parse::<u32>().ok())
        .ok_or_else(|| Error::Parse { line: n, msg: "not a checkpoint file".into() })?;
    if version != VERSION {
        return Err(Error::Parse { line: n, msg: format!("unsupported checkpoint version {version}") });
    }
    let (n, model) = lines.field("model")?;
    match model {
        "mlp" => {
            let input_dim = lines.parsed("input_dim")?;
            let (n, h) = lines.field("hidden")?;
            let hidden = parse_list(n, h)?;
            let activation: Activation = lines.parsed("activation")?;
            let (n, h) = lines.field("head")?;
            let head: HeadKind = serde_json::from_str(h)
                .map_err(|e| Error::Parse { line: n, msg: format!("head: {e}") })?;
            let seed = lines.parsed("seed")?;
            let count: usize = lines.parsed("params")?;
            let mut params = Vec::with_capacity(count);
            for _ in 0..count {
                let (n, l) = lines.next_line()?;
                params.push(l.parse().map_err(|e| Error::Parse { line: n, msg: format!("{l:?}: {e}") })?);
            }
            let spec = MlpSpec { input_dim, hidden, activation, head, seed };
            Ok(Checkpoint::Mlp(Mlp::from_params(spec, params)?))
        }
        "pom" => {
            let dim: usize = lines.parsed("dim")?;
            let k: usize = lines.parsed("k")?;
            let (n, t) = lines.field("thresholds")?;
            let thresholds = parse_list(n, t)?;
            let (n, w) = lines.field("weights")?;
            let weights: Vec<f64> = parse_list(n, w)?;
            let p = PomParams::new(thresholds, weights)?;
            if p.k() != k || p.dim() != dim {
                return Err(Error::Parse { line: n, msg: "threshold or weight count disagrees with header".into() });
            }
            Ok(Checkpoint::Pom(p))
        }
        other => Err(Error::Parse { line: n, msg: format!("unknown model type {other:?}") }),
    }
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let text = match ckpt {
        Checkpoint::Mlp(m) => mlp_to_string(m),
        Checkpoint::Pom(p) => pom_to_string(p),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unimodal::Family;

    #[test]
    fn mlp_round_trip_is_bit_exact() {
        let spec = MlpSpec {
            input_dim: 3,
            hidden: vec![5, 4],
            activation: Activation::Tanh,
            head: HeadKind::Unimodal { k: 6, family: Family::Cauchy },
            seed: 17,
        };
        let m = Mlp::new(spec).unwrap();
        let back = from_str(&mlp_to_string(&m)).unwrap();
        assert_eq!(back, Checkpoint::Mlp(m));
    }

    #[test]
    fn mlp_without_hidden_layers() {
        let spec = MlpSpec { input_dim: 2, hidden: vec![], activation: Activation::Relu, head: HeadKind::Binomial { k: 4 }, seed: 0 };
        let m = Mlp::new(spec).unwrap();
        assert_eq!(from_str(&mlp_to_string(&m)).unwrap(), Checkpoint::Mlp(m));
    }

    #[test]
    fn pom_round_trip() {
        let p = PomParams::new(vec![-1.25, 0.1, 1.0 / 3.0], vec![0.5, -2.0]).unwrap();
        assert_eq!(from_str(&pom_to_string(&p)).unwrap(), Checkpoint::Pom(p));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(from_str("").is_err());
        assert!(from_str("something else 1\n").is_err());
        assert!(from_str(&format!("{MAGIC} 2\nmodel pom\n")).is_err());
        let p = PomParams::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        let text = pom_to_string(&p).replace("k 3", "k 4");
        assert!(from_str(&text).is_err());
        let spec = MlpSpec { input_dim: 2, hidden: vec![3], activation: Activation::Relu, head: HeadKind::Softmax { k: 3 }, seed: 0 };
        let text = mlp_to_string(&Mlp::new(spec).unwrap());
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        match from_str(&truncated) {
            Err(Error::Parse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
