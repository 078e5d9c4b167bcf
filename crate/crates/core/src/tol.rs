//! Numerical tolerances and floors shared across the crate.

/// Absolute tolerance on `sum(p) == 1` for a valid probability vector.
pub const SUM_TOL: f64 = 1e-9;

/// Adjacent entries closer than this are treated as equal by the
/// unimodality check.
pub const UNIMODAL_ADJ_TOL: f64 = 1e-12;

/// Lower bound added to the softplus scale of the unimodal head.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Per-bin additive floor used when every bin mass underflows.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Probability clamp inside logarithms of CE and KL losses.
pub const LOG_CLAMP: f64 = 1e-12;

/// Slack for ties in the sub-bin inequalities of the unimodality proof.
pub const LEMMA_TIE_TOL: f64 = 1e-12;

/// Largest class count accepted by the exact transport oracle.
pub const ORACLE_MAX_K: usize = 16;

/// Number of equal bins in mode-probability histograms.
pub const HIST_BINS: usize = 20;
