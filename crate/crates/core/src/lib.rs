//! Ordinal regression with guaranteed unimodal output distributions.
//!
//! The central piece is [`unimodal`]: a network predicts a location `mu` and
//! a scale `sigma`, and class probabilities are the masses a symmetric
//! location–scale density puts into `k` fixed equal bins over `[-1, 1]`.
//! Such vectors are unimodal for every input, not just on training data.
//! Training uses the optimal-transport loss of [`transport`], which unlike
//! cross entropy charges for probability mass in proportion to how far it
//! sits from the true class.
//!
//! Around it sit the comparison models of the Abalone benchmark:
//!
//! - [`pom`]: the proportional odds model, fitted by maximum likelihood.
//! - [`nn`]: a small MLP engine with regression, softmax, unimodal and
//!   binomial heads, and MSE / cross-entropy / transport / KL losses.
//! - [`soft_targets`]: soft-label generators used by label-smoothing methods.
//! - [`data`], [`metrics`] and [`bench`]: ingestion, evaluation and the
//!   multi-seed experiment grid driven by the `ordbench` binary.

pub mod bench;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod pom;
pub mod prob;
pub mod soft_targets;
pub mod special;
pub mod tol;
pub mod transport;
pub mod unimodal;

pub use error::{Error, Result};
pub use model::OrdinalModel;
pub use prob::{LabelSpace, ProbVector};
