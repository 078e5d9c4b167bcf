use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{SexEncoding, SplitSpec, DEFAULT_RING_EDGES};
use crate::error::{config, Result};
use crate::nn::{Activation, HeadKind, LossKind, TrainConfig};
use crate::pom::PomFitOptions;
use crate::soft_targets::SoftTargetSpec;
use crate::unimodal::Family;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// UCI layout; labels come from binning `rings`.
    #[default]
    Abalone,
    /// Header row with numeric features and a `label` column.
    Labeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub format: DataFormat,
    pub has_header: bool,
    pub sex: SexEncoding,
    pub ring_edges: Vec<i64>,
    /// Number of classes of a labelled file.
    pub k: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            format: DataFormat::Abalone,
            has_header: true,
            sex: SexEncoding::Drop,
            ring_edges: DEFAULT_RING_EDGES.to_vec(),
            k: None,
        }
    }
}

/// Trunk shared by every network method; only the head differs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64], activation: Activation::Relu }
    }
}

/// A head without its class count, which comes from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadChoice {
    Regression,
    Softmax,
    Unimodal {
        #[serde(default)]
        family: Family,
    },
    Binomial,
}

impl HeadChoice {
    pub fn with_k(self, k: usize) -> HeadKind {
        match self {
            HeadChoice::Regression => HeadKind::LinearRegression { k },
            HeadChoice::Softmax => HeadKind::Softmax { k },
            HeadChoice::Unimodal { family } => HeadKind::Unimodal { k, family },
            HeadChoice::Binomial => HeadKind::Binomial { k },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelChoice {
    Pom,
    Net {
        head: HeadChoice,
        loss: LossKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        soft_target: Option<SoftTargetSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    #[serde(flatten)]
    pub model: ModelChoice,
}

/// Names accepted by [`MethodSpec::preset`], in table order.
pub const PRESETS: [&str; 10] = [
    "regression",
    "classification",
    "pom",
    "proposed",
    "classification-ot",
    "unimodal-ce",
    "dldl",
    "sord",
    "liu",
    "binomial",
];

impl MethodSpec {
    fn net(name: &str, head: HeadChoice, loss: LossKind, soft_target: Option<SoftTargetSpec>) -> Self {
        Self { name: name.into(), model: ModelChoice::Net { head, loss, soft_target } }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let ot = LossKind::OptimalTransport { m: 1.0 };
        let uni = HeadChoice::Unimodal { family: Family::Normal };
        Ok(match name {
            "regression" => Self::net(name, HeadChoice::Regression, LossKind::Mse, None),
            "classification" => Self::net(name, HeadChoice::Softmax, LossKind::CrossEntropy, None),
            "pom" => Self { name: name.into(), model: ModelChoice::Pom },
            "proposed" => Self::net(name, uni, ot, None),
            "classification-ot" => Self::net(name, HeadChoice::Softmax, ot, None),
            "unimodal-ce" => Self::net(name, uni, LossKind::CrossEntropy, None),
            "dldl" => Self::net(name, HeadChoice::Softmax, LossKind::KlToSoftTarget, Some(SoftTargetSpec::squared_exp())),
            "sord" => Self::net(name, HeadChoice::Softmax, LossKind::KlToSoftTarget, Some(SoftTargetSpec::linear_exp())),
            "liu" => Self::net(name, HeadChoice::Softmax, ot, Some(SoftTargetSpec::mix())),
            "binomial" => Self::net(name, HeadChoice::Binomial, ot, None),
            other => {
                return Err(config(format!("unknown method {other:?}; presets are {}", PRESETS.join(", "))))
            }
        })
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(config(format!("method name {:?} must be non-empty [A-Za-z0-9_-]", self.name)));
        }
        if let ModelChoice::Net { head, loss, soft_target } = &self.model {
            let head = head.with_k(k);
            loss.check_head(&head)?;
            if let Some(st) = soft_target {
                st.validate()?;
                if !matches!(head, HeadKind::Softmax { .. }) {
                    return Err(config(format!("{}: soft targets need a softmax head", self.name)));
                }
                match loss {
                    LossKind::KlToSoftTarget | LossKind::OptimalTransport { m: 1.0 } => {}
                    other => {
                        return Err(config(format!(
                            "{}: soft targets train with KL or transport m = 1, got {}",
                            self.name,
                            other.label()
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

/// A preset name or a full method table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Preset(String),
    Custom(MethodSpec),
}

impl MethodEntry {
    pub fn resolve(&self) -> Result<MethodSpec> {
        match self {
            MethodEntry::Preset(n) => MethodSpec::preset(n),
            MethodEntry::Custom(m) => Ok(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub pom: PomFitOptions,
    pub n_trials: usize,
    /// Defaults to `1..=n_trials`.
    pub seeds: Option<Vec<u64>>,
    /// Not part of the digest.
    pub out_dir: Option<PathBuf>,
    pub methods: Vec<MethodEntry>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            model: ModelConfig::default(),
            pom: PomFitOptions::default(),
            n_trials: 5,
            seeds: None,
            out_dir: None,
            methods: PRESETS.iter().map(|s| MethodEntry::Preset(s.to_string())).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (1..=self.n_trials as u64).collect(),
        }
    }

    pub fn methods(&self) -> Result<Vec<MethodSpec>> {
        self.methods.iter().map(MethodEntry::resolve).collect()
    }

    /// Checks everything that does not need the data file. `k` is the
    /// class count.
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.n_trials == 0 {
            return Err(config("n_trials must be >= 1"));
        }
        let seeds = self.seeds();
        if seeds.is_empty() {
            return Err(config("seed list is empty"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(config(format!("seeds must be distinct: {seeds:?}")));
        }
        self.split.validate()?;
        self.train.validate()?;
        if self.model.hidden.contains(&0) {
            return Err(config("hidden layer widths must be >= 1"));
        }
        let methods = self.methods()?;
        if methods.is_empty() {
            return Err(config("method list is empty"));
        }
        for (i, m) in methods.iter().enumerate() {
            m.validate(k)?;
            if methods[..i].iter().any(|o| o.name == m.name) {
                return Err(config(format!("duplicate method name {:?}", m.name)));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the resolved configuration, excluding `out_dir`.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        c.seeds = Some(self.seeds());
        c.methods = match self.methods() {
            Ok(m) => m.into_iter().map(MethodEntry::Custom).collect(),
            Err(_) => c.methods,
        };
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            MethodSpec::preset(name).unwrap().validate(8).unwrap();
        }
        assert!(MethodSpec::preset("nope").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        c.validate(8).unwrap();
    }

    #[test]
    fn custom_methods_from_toml() {
        let text = r#"
n_trials = 2
methods = [
  "proposed",
  { name = "cauchy-ot", model = "net", head = { kind = "unimodal", family = "cauchy" }, loss = { kind = "optimal_transport", m = 2.0 } },
  { name = "sord2", model = "net", head = { kind = "softmax" }, loss = { kind = "kl_to_soft_target" }, soft_target = { kind = "linear_exp", tau = 2.0 } },
]
[train]
epochs = 3
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.seeds(), vec![1, 2]);
        let m = c.methods().unwrap();
        assert_eq!(m[1].name, "cauchy-ot");
        c.validate(8).unwrap();
    }

    #[test]
    fn invalid_configs() {
        let bad_pair = r#"methods = [{ name = "x", model = "net", head = { kind = "regression" }, loss = { kind = "cross_entropy" } }]"#;
        assert!(ExperimentConfig::from_toml(bad_pair).unwrap().validate(8).is_err());
        assert!(ExperimentConfig::from_toml("unknown_key = 1").is_err());
        let c = ExperimentConfig { n_trials: 0, ..Default::default() };
        assert!(c.validate(8).is_err());
        let c = ExperimentConfig { seeds: Some(vec![1, 1]), ..Default::default() };
        assert!(c.validate(8).is_err());
        let c = ExperimentConfig { methods: vec![MethodEntry::Preset("pom".into()); 2], ..Default::default() };
        assert!(c.validate(8).is_err());
    }

    #[test]
    fn digest_ignores_out_dir() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { out_dir: Some("/tmp/x".into()), ..Default::default() };
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig { n_trials: 4, ..Default::default() };
        assert_ne!(a.digest(), c.digest());
    }
}
