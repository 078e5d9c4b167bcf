//! The prediction interface shared by every trained model.

use crate::error::Result;
use crate::nn::head::Output;

/// A trained ordinal predictor over classes `1..=k`.
pub trait OrdinalModel: Send + Sync {
    fn k(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<Output>;

    /// The latent scale behind the prediction, for heads that have one.
    fn latent_scale(&self, _x: &[f64]) -> Result<Option<f64>> {
        Ok(None)
    }

    fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(class_from_output(&self.predict(x)?, self.k()))
    }
}

/// Rounds a scalar to the nearest class (ties to even, clamped to `1..=k`)
/// or takes the lowest-index mode of a distribution.
pub fn class_from_output(output: &Output, k: usize) -> usize {
    match output {
        Output::Scalar(y) => {
            let r = y.round_ties_even();
            if r.is_nan() || r < 1.0 {
                1
            } else if r > k as f64 {
                k
            } else {
                r as usize
            }
        }
        Output::Distribution(p) => p.argmax_class(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ProbVector;

    #[test]
    fn rounding_rule() {
        assert_eq!(class_from_output(&Output::Scalar(3.6), 8), 4);
        assert_eq!(class_from_output(&Output::Scalar(-2.4), 8), 1);
        assert_eq!(class_from_output(&Output::Scalar(11.0), 8), 8);
        assert_eq!(class_from_output(&Output::Scalar(2.5), 8), 2);
        assert_eq!(class_from_output(&Output::Scalar(3.5), 8), 4);
        let p = ProbVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(class_from_output(&Output::Distribution(p), 3), 2);
    }
}
