//! Minibatch training of an [`Mlp`] with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::head;
use crate::nn::loss::{loss_and_grad, LossKind, Target};
use crate::nn::mlp::{Mlp, Workspace};
use crate::nn::optim::{Adam, TrainConfig};

/// Row-major features with one target per row.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: &'a [f64],
    pub dim: usize,
    pub targets: &'a [Target],
}

impl<'a> Samples<'a> {
    pub fn new(x: &'a [f64], dim: usize, targets: &'a [Target]) -> Result<Self> {
        if dim == 0 || x.len() != dim * targets.len() {
            return Err(Error::LengthMismatch(x.len(), dim * targets.len()));
        }
        Ok(Self { x, dim, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn example(&self, i: usize) -> Example<'a> {
        Example { x: self.row(i), target: &self.targets[i] }
    }

    pub fn examples(&self) -> Vec<Example<'a>> {
        (0..self.len()).map(|i| self.example(i)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub x: &'a [f64],
    pub target: &'a Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub lr: f64,
}

#[derive(Default)]
struct Scratch {
    ws: Workspace,
    grad: Vec<f64>,
    d_raw: Vec<f64>,
}

/// Mean loss over `batch`; the mean parameter gradient is written to
/// `scratch.grad`.
fn accumulate(model: &Mlp, batch: &[Example], loss: &LossKind, s: &mut Scratch) -> Result<f64> {
    s.grad.clear();
    s.grad.resize(model.n_params(), 0.0);
    let mut total = 0.0;
    for ex in batch {
        if ex.x.len() != model.spec().input_dim {
            return Err(Error::LengthMismatch(ex.x.len(), model.spec().input_dim));
        }
        let raw = model.raw_forward(ex.x, &mut s.ws);
        let hf = head::forward(model.head(), raw);
        let (l, g_out) = loss_and_grad(loss, &hf.output, ex.target)?;
        total += l;
        s.d_raw.clear();
        s.d_raw.resize(model.head().raw_dim(), 0.0);
        hf.backward(&g_out, &mut s.d_raw);
        model.accumulate_grad(&mut s.ws, &s.d_raw, &mut s.grad);
    }
    let scale = 1.0 / batch.len() as f64;
    s.grad.iter_mut().for_each(|g| *g *= scale);
    Ok(total * scale)
}

/// Mean loss of the model over a batch.
pub fn batch_loss(model: &Mlp, batch: &[Example], loss: &LossKind) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        let out = model.forward(ex.x)?;
        total += crate::nn::loss::loss(loss, &out, ex.target)?;
    }
    Ok(total / batch.len() as f64)
}

/// Mean loss and its gradient with respect to every parameter.
pub fn loss_and_param_grad(model: &Mlp, batch: &[Example], loss: &LossKind) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(crate::error::domain("batch must not be empty"));
    }
    let mut s = Scratch::default();
    let l = accumulate(model, batch, loss, &mut s)?;
    Ok((l, s.grad))
}

/// One Adam update on one batch; returns the batch loss before the update.
pub fn backward_step(
    model: &mut Mlp,
    batch: &[Example],
    loss: &LossKind,
    opt: &mut Adam,
    lr: f64,
) -> Result<f64> {
    let mut s = Scratch::default();
    step_with(model, batch, loss, opt, lr, &mut s)
}

fn step_with(
    model: &mut Mlp,
    batch: &[Example],
    loss: &LossKind,
    opt: &mut Adam,
    lr: f64,
    s: &mut Scratch,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(crate::error::domain("batch must not be empty"));
    }
    let l = accumulate(model, batch, loss, s)?;
    if !l.is_finite() || s.grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite loss or gradient (loss = {l}) after {} optimizer steps",
            opt.steps()
        )));
    }
    opt.step(model.params_mut(), &s.grad, lr);
    Ok(l)
}

/// Trains `model` in place for `cfg.epochs` epochs of shuffled minibatches.
pub fn fit(model: &mut Mlp, data: &Samples, loss: &LossKind, cfg: &TrainConfig) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    loss.check_head(model.head())?;
    if data.is_empty() {
        return Err(crate::error::domain("training set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::from_config(model.n_params(), cfg);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut scratch = Scratch::default();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data.example(i)));
            let l = step_with(model, &batch, loss, &mut opt, lr, &mut scratch)?;
            total += l * chunk.len() as f64;
        }
        curve.push(EpochStats { epoch: epoch + 1, train_loss: total / data.len() as f64, lr });
    }
    Ok(curve)
}
