//! Dense feed-forward network with a flat parameter vector.
//!
//! Layer `l` stores its weights row-major with shape `(out, in)`, followed
//! by its `out` biases. All layers are concatenated into one `Vec<f64>`, which
//! is what the optimizer, the checkpoint format and gradient checks see.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::model::OrdinalModel;
use crate::nn::head::{self, HeadKind, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(config(format!("unknown activation '{other}'"))),
        }
    }
}

/// Architecture of a network: everything except the parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: HeadKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(config("input_dim must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(config("hidden layer widths must be >= 1"));
        }
        self.head.validate()
    }

    fn layers(&self) -> Vec<Layer> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.head.raw_dim());
        let mut off = 0;
        dims.windows(2)
            .map(|d| {
                let l = Layer { w: off, b: off + d[0] * d[1], fan_in: d[0], fan_out: d[1] };
                off += d[0] * d[1] + d[1];
                l
            })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|l| l.fan_in * l.fan_out + l.fan_out).sum()
    }
}

/// Buffers reused across forward/backward passes.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`
    /// (post-activation for hidden layers, raw for the last).
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

impl Mlp {
    /// Uniform initialization in `±1/sqrt(fan_in)` from the spec seed.
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layers();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut params = vec![0.0; spec.n_params()];
        for l in &layers {
            let bound = 1.0 / (l.fan_in as f64).sqrt();
            for p in &mut params[l.w..l.b + l.fan_out] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        Ok(Self { spec, layers, params })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_params();
        Self::from_params(spec, vec![0.0; n])
    }

    pub fn from_params(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.n_params() {
            return Err(Error::LengthMismatch(params.len(), spec.n_params()));
        }
        let layers = spec.layers();
        Ok(Self { spec, layers, params })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn head(&self) -> &HeadKind {
        &self.spec.head
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::LengthMismatch(x.len(), self.spec.input_dim));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("input features must be finite"));
        }
        Ok(())
    }

    /// Runs the dense layers and returns the raw head inputs.
    pub(crate) fn raw_forward<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> &'w [f64] {
        let n = self.layers.len();
        ws.acts.resize_with(n + 1, Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        for (li, l) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(li + 1);
            let input = &head[li];
            let out = &mut tail[0];
            out.clear();
            let w = &self.params[l.w..l.b];
            let b = &self.params[l.b..l.b + l.fan_out];
            for j in 0..l.fan_out {
                let row = &w[j * l.fan_in..(j + 1) * l.fan_in];
                let z = b[j] + dot(row, input);
                out.push(z);
            }
            if li + 1 < n {
                match self.spec.activation {
                    Activation::Relu => out.iter_mut().for_each(|v| *v = v.max(0.0)),
                    Activation::Tanh => out.iter_mut().for_each(|v| *v = v.tanh()),
                }
            }
        }
        &ws.acts[n]
    }

    /// Backpropagates `d_raw` through the layers of the last
    /// [`Self::raw_forward`] call, adding parameter gradients into `grad`.
    pub(crate) fn accumulate_grad(&self, ws: &mut Workspace, d_raw: &[f64], grad: &mut [f64]) {
        ws.delta.clear();
        ws.delta.extend_from_slice(d_raw);
        for (li, l) in self.layers.iter().enumerate().rev() {
            let input = &ws.acts[li];
            let (gw, gb) = grad[l.w..l.b + l.fan_out].split_at_mut(l.fan_in * l.fan_out);
            for (j, &dj) in ws.delta.iter().enumerate() {
                if dj == 0.0 {
                    continue;
                }
                gb[j] += dj;
                axpy(dj, input, &mut gw[j * l.fan_in..(j + 1) * l.fan_in]);
            }
            if li == 0 {
                break;
            }
            let w = &self.params[l.w..l.b];
            ws.delta_prev.clear();
            ws.delta_prev.resize(l.fan_in, 0.0);
            for (j, &dj) in ws.delta.iter().enumerate() {
                if dj != 0.0 {
                    axpy(dj, &w[j * l.fan_in..(j + 1) * l.fan_in], &mut ws.delta_prev);
                }
            }
            match self.spec.activation {
                Activation::Relu => {
                    for (d, &a) in ws.delta_prev.iter_mut().zip(input) {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Tanh => {
                    for (d, &a) in ws.delta_prev.iter_mut().zip(input) {
                        *d *= 1.0 - a * a;
                    }
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }

    /// Raw outputs of the last dense layer, before the head.
    pub fn raw_outputs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut ws = Workspace::default();
        Ok(self.raw_forward(x, &mut ws).to_vec())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Output> {
        let raw = self.raw_outputs(x)?;
        Ok(head::apply(&self.spec.head, &raw))
    }
}

impl OrdinalModel for Mlp {
    fn k(&self) -> usize {
        self.spec.head.k()
    }

    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn predict(&self, x: &[f64]) -> Result<Output> {
        self.forward(x)
    }

    fn latent_scale(&self, x: &[f64]) -> Result<Option<f64>> {
        match self.spec.head {
            HeadKind::Unimodal { family, .. } => {
                let raw = self.raw_outputs(x)?;
                Ok(Some(head::unimodal_params(family, &raw).sigma))
            }
            _ => Ok(None),
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the reduction order fixed and vectorizable
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for t in 0..4 {
            acc[t] += a[4 * c + t] * b[4 * c + t];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unimodal::Family;

    fn spec(head: HeadKind) -> MlpSpec {
        MlpSpec { input_dim: 3, hidden: vec![5, 4], activation: Activation::Relu, head, seed: 7 }
    }

    #[test]
    fn zero_network_softmax_is_uniform() {
        let m = Mlp::zeros(spec(HeadKind::Softmax { k: 4 })).unwrap();
        let out = m.forward(&[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(out.probs().unwrap().as_slice(), &[0.25; 4]);
    }

    #[test]
    fn zero_network_unimodal_is_symmetric() {
        let m = Mlp::zeros(spec(HeadKind::Unimodal { k: 5, family: Family::Normal })).unwrap();
        let out = m.forward(&[1.0, 2.0, 3.0]).unwrap();
        let p = out.probs().unwrap().as_slice().to_vec();
        for i in 0..5 {
            assert!((p[i] - p[4 - i]).abs() < 1e-12);
        }
        let sigma = m.latent_scale(&[1.0, 2.0, 3.0]).unwrap().unwrap();
        assert!((sigma - (2f64.ln() + 1e-3)).abs() < 1e-15);
    }

    #[test]
    fn binomial_head_at_half() {
        let m = Mlp::zeros(spec(HeadKind::Binomial { k: 5 })).unwrap();
        let out = m.forward(&[0.0; 3]).unwrap();
        let p = out.probs().unwrap().as_slice();
        for (a, b) in p.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert!((a - b / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = Mlp::new(spec(HeadKind::Softmax { k: 4 })).unwrap();
        assert!(matches!(m.forward(&[1.0, 2.0]), Err(Error::LengthMismatch(2, 3))));
        assert!(matches!(m.forward(&[1.0, f64::NAN, 0.0]), Err(Error::Domain(_))));
        assert!(Mlp::from_params(spec(HeadKind::Softmax { k: 4 }), vec![0.0; 3]).is_err());
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = Mlp::new(spec(HeadKind::Softmax { k: 4 })).unwrap();
        let b = Mlp::new(spec(HeadKind::Softmax { k: 4 })).unwrap();
        assert_eq!(a.params(), b.params());
        let mut s = spec(HeadKind::Softmax { k: 4 });
        s.seed = 8;
        assert_ne!(a.params(), Mlp::new(s).unwrap().params());
        // 3*5+5 + 5*4+4 + 4*4+4
        assert_eq!(a.n_params(), 64);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(HeadKind::Softmax { k: 4 });
        s.hidden = vec![3, 0];
        assert!(Mlp::new(s).is_err());
        let mut s = spec(HeadKind::Softmax { k: 4 });
        s.input_dim = 0;
        assert!(Mlp::new(s).is_err());
    }
}
