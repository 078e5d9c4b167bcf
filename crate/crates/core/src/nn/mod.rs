//! Feed-forward networks with reverse-mode gradients, Adam, and the output
//! heads and losses compared in the benchmark.

pub mod head;
pub mod loss;
pub mod mlp;
pub mod optim;
pub mod train;

pub use head::{HeadKind, Output};
pub use loss::{loss, LossKind, Target};
pub use mlp::{Activation, Mlp, MlpSpec};
pub use optim::{Adam, TrainConfig};
pub use train::{backward_step, batch_loss, fit, loss_and_param_grad, EpochStats, Example, Samples};
