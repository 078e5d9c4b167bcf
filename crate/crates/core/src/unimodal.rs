//! The unimodal output head.
//!
//! A location–scale density with location `mu` and scale `sigma` is laid over
//! `k` fixed, equal-width bins covering `[-1, 1]`. The mass in bin `i`,
//! renormalized over the `k` bins, is the probability of class `i`. Because
//! the density is symmetric and unimodal about `mu` and the bins are equal,
//! the resulting vector rises up to the bin holding `mu` and falls after it,
//! whatever `mu` and `sigma` are.
//!
//! Bin masses are computed in log space, from whichever tail of the CDF is
//! small at the bin, so bins many scales away from `mu` keep their relative
//! sizes instead of cancelling to zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::prob::ProbVector;
use crate::special::{
    ln_1m_exp, log_sum_exp, sigmoid, softplus, std_normal_cdf, std_normal_ln_cdf,
    std_normal_ln_pdf,
};
use crate::tol::{LEMMA_TIE_TOL, SIGMA_FLOOR, UNDERFLOW_FLOOR};

/// Symmetric unimodal location–scale families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Normal,
    Logistic,
    Cauchy,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Normal, Family::Logistic, Family::Cauchy];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Logistic => "logistic",
            Family::Cauchy => "cauchy",
        }
    }

    /// CDF of the standardized (`mu = 0`, `sigma = 1`) member.
    pub fn std_cdf(&self, z: f64) -> f64 {
        match self {
            Family::Normal => std_normal_cdf(z),
            Family::Logistic => sigmoid(z),
            Family::Cauchy => {
                if z < 0.0 {
                    (-1.0 / z).atan() / PI
                } else if z > 0.0 {
                    1.0 - (1.0 / z).atan() / PI
                } else {
                    0.5
                }
            }
        }
    }

    /// `ln F(z)` of the standardized member, accurate in the lower tail.
    pub fn std_ln_cdf(&self, z: f64) -> f64 {
        match self {
            Family::Normal => std_normal_ln_cdf(z),
            Family::Logistic => -softplus(-z),
            Family::Cauchy => {
                if z < 0.0 {
                    ((-1.0 / z).atan() / PI).ln()
                } else {
                    self.std_cdf(z).ln()
                }
            }
        }
    }

    pub fn std_ln_pdf(&self, z: f64) -> f64 {
        match self {
            Family::Normal => std_normal_ln_pdf(z),
            Family::Logistic => {
                let a = z.abs();
                -a - 2.0 * softplus(-a)
            }
            Family::Cauchy => -PI.ln() - (z * z).ln_1p(),
        }
    }

    pub fn std_pdf(&self, z: f64) -> f64 {
        self.std_ln_pdf(z).exp()
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Family::Normal),
            "logistic" => Ok(Family::Logistic),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(crate::error::config(format!("unknown family '{other}'"))),
        }
    }
}

/// CDF of `family(mu, sigma)` at `t`.
pub fn cdf(family: Family, mu: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("scale must be positive, got {sigma}")));
    }
    Ok(family.std_cdf((t - mu) / sigma))
}

/// Density of `family(mu, sigma)` at `t`.
pub fn pdf(family: Family, mu: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("scale must be positive, got {sigma}")));
    }
    Ok(family.std_pdf((t - mu) / sigma) / sigma)
}

/// Fixed thresholds `-1 = a_0 < a_1 < ... < a_k = 1` with spacing `2/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    thresholds: Vec<f64>,
}

impl BinGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(domain(format!("bin grid needs k >= 2, got {k}")));
        }
        let thresholds = (0..=k).map(|i| -1.0 + 2.0 * i as f64 / k as f64).collect();
        Ok(Self { thresholds })
    }

    pub fn k(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn width(&self) -> f64 {
        2.0 / self.k() as f64
    }

    /// The 1-based bin whose open interior contains `t`, if any.
    pub fn open_bin_of(&self, t: f64) -> Option<usize> {
        self.thresholds
            .windows(2)
            .position(|w| w[0] < t && t < w[1])
            .map(|i| i + 1)
    }
}

/// A member of a location–scale family with `sigma >= SIGMA_FLOOR`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationScale {
    pub family: Family,
    pub mu: f64,
    pub sigma: f64,
}

impl LocationScale {
    pub fn new(family: Family, mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(domain(format!("location must be finite, got {mu}")));
        }
        if !(sigma >= SIGMA_FLOOR) || !sigma.is_finite() {
            return Err(domain(format!(
                "scale must be finite and >= {SIGMA_FLOOR}, got {sigma}"
            )));
        }
        Ok(Self { family, mu, sigma })
    }

    /// Maps unconstrained network outputs to `(mu, softplus(s) + floor)`.
    pub fn from_raw(family: Family, raw_mu: f64, raw_scale: f64) -> Self {
        Self { family, mu: raw_mu, sigma: softplus(raw_scale) + SIGMA_FLOOR }
    }
}

/// Class probabilities and their derivatives with respect to `mu` and `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadJacobian {
    pub probs: Vec<f64>,
    pub d_mu: Vec<f64>,
    pub d_sigma: Vec<f64>,
}

/// `ln` of the mass of `[lo, hi]` (standardized endpoints `za < zb`).
fn ln_bin_mass(family: Family, za: f64, zb: f64) -> f64 {
    if za >= 0.0 {
        // right of the location: use the upper tail, F_upper(z) = F(-z)
        let hi = family.std_ln_cdf(-za);
        let lo = family.std_ln_cdf(-zb);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + ln_1m_exp(lo - hi)
    } else if zb <= 0.0 {
        let hi = family.std_ln_cdf(zb);
        let lo = family.std_ln_cdf(za);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + ln_1m_exp(lo - hi)
    } else {
        (1.0 - family.std_cdf(za) - family.std_cdf(-zb)).ln()
    }
}

fn standardized(grid: &BinGrid, ls: &LocationScale) -> Vec<f64> {
    grid.thresholds.iter().map(|&a| (a - ls.mu) / ls.sigma).collect()
}

fn ln_masses(grid: &BinGrid, ls: &LocationScale, z: &[f64]) -> Vec<f64> {
    (0..grid.k()).map(|i| ln_bin_mass(ls.family, z[i], z[i + 1])).collect()
}

fn normalize(ln_m: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(ln_m);
    if lse.is_finite() {
        ln_m.iter().map(|l| (l - lse).exp()).collect()
    } else {
        // every bin underflowed: fall back to the additive floor
        let m: Vec<f64> = ln_m.iter().map(|l| l.exp() + UNDERFLOW_FLOOR).collect();
        let s: f64 = m.iter().sum();
        m.into_iter().map(|v| v / s).collect()
    }
}

/// Normalized bin masses: a unimodal distribution over the `k` classes.
pub fn head_probs(grid: &BinGrid, ls: &LocationScale) -> ProbVector {
    let z = standardized(grid, ls);
    ProbVector::from_trusted(normalize(&ln_masses(grid, ls, &z)))
}

/// Probabilities and their exact derivatives in `mu` and `sigma`.
///
/// With unnormalized masses `m_i` and `p_i = m_i / sum_j m_j`:
/// `dm_i/dmu = f(a_(i-1)) - f(a_i)`, `dm_i/dsigma = f(a_(i-1)) z_(i-1) -
/// f(a_i) z_i`, and `dp_i = p_i (r_i - sum_j p_j r_j)` with `r_i = dm_i/m_i`.
pub fn head_grad(grid: &BinGrid, ls: &LocationScale) -> HeadJacobian {
    let k = grid.k();
    let z = standardized(grid, ls);
    let ln_m = ln_masses(grid, ls, &z);
    let probs = normalize(&ln_m);
    let ln_sigma = ls.sigma.ln();
    let ln_f: Vec<f64> = z.iter().map(|&zi| ls.family.std_ln_pdf(zi) - ln_sigma).collect();

    let mut r_mu = vec![0.0; k];
    let mut r_sigma = vec![0.0; k];
    for i in 0..k {
        if ln_m[i] == f64::NEG_INFINITY {
            continue;
        }
        let left = (ln_f[i] - ln_m[i]).exp();
        let right = (ln_f[i + 1] - ln_m[i]).exp();
        r_mu[i] = left - right;
        r_sigma[i] = left * z[i] - right * z[i + 1];
    }
    let mean_mu: f64 = probs.iter().zip(&r_mu).map(|(p, r)| p * r).sum();
    let mean_sigma: f64 = probs.iter().zip(&r_sigma).map(|(p, r)| p * r).sum();
    let d_mu = probs.iter().zip(&r_mu).map(|(p, r)| p * (r - mean_mu)).collect();
    let d_sigma = probs.iter().zip(&r_sigma).map(|(p, r)| p * (r - mean_sigma)).collect();
    HeadJacobian { probs, d_mu, d_sigma }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        // the second test stops refinement once rounding dominates
        if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 8.0 * f64::EPSILON * (left + right).abs() {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Sub-bin masses `(B_i1, B_i2, B_(i+1)1, B_(i+1)2)` around a location that
/// lies inside bin `i`, obtained by quadrature of the density.
///
/// Bin `i` is split at `mu` into lengths `a` and `b`; bin `i + 1` is split
/// into lengths `b` and `a`. When `mu` is in the last bin the mirror image is
/// used, which is the same configuration by symmetry of grid and density.
pub fn lemma_sub_bin_masses(grid: &BinGrid, ls: &LocationScale) -> Result<[f64; 4]> {
    let bin = grid.open_bin_of(ls.mu).ok_or_else(|| {
        domain(format!("location {} is not inside an open bin of the grid", ls.mu))
    })?;
    let (bin, mu) = if bin == grid.k() { (1, -ls.mu) } else { (bin, ls.mu) };
    let t = grid.thresholds();
    let (lo, hi, next) = (t[bin - 1], t[bin], t[bin + 1]);
    let b = hi - mu;
    let density = |x: f64| ls.family.std_pdf((x - mu) / ls.sigma) / ls.sigma;
    let tol = 1e-16;
    Ok([
        integrate(&density, lo, mu, tol),
        integrate(&density, mu, hi, tol),
        integrate(&density, hi, hi + b, tol),
        integrate(&density, hi + b, next, tol),
    ])
}

/// Checks the two sub-bin inequalities from the unimodality proof:
/// `mass(B_i2) > mass(B_(i+1)1)` and `mass(B_i1) > mass(B_(i+1)2)`.
/// A difference within `1e-12` is accepted as a tie.
pub fn verify_sub_bin_inequalities(grid: &BinGrid, ls: &LocationScale) -> Result<bool> {
    let [i1, i2, j1, j2] = lemma_sub_bin_masses(grid, ls)?;
    let holds = |l: f64, r: f64| l > r || (l - r).abs() <= LEMMA_TIE_TOL;
    Ok(holds(i2, j1) && holds(i1, j2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::is_unimodal;

    #[test]
    fn cdf_examples() {
        assert_eq!(cdf(Family::Normal, 0.0, 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(cdf(Family::Logistic, 0.0, 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(cdf(Family::Cauchy, 0.0, 1.0, 0.0).unwrap(), 0.5);
        let v = cdf(Family::Normal, 0.0, 1.0, 1.0).unwrap();
        assert!((v - 0.841345).abs() < 1e-6);
        assert!(cdf(Family::Normal, 0.0, 0.0, 1.0).is_err());
        assert!(cdf(Family::Cauchy, 0.0, -1.0, 1.0).is_err());
        // Cauchy: F(1) = 3/4
        assert!((cdf(Family::Cauchy, 0.0, 1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ln_cdf_consistent_with_cdf() {
        for fam in Family::ALL {
            for &z in &[-30.0, -5.0, -1.0, -0.1, 0.0, 0.4, 2.0, 7.0] {
                let direct = fam.std_cdf(z).ln();
                let logd = fam.std_ln_cdf(z);
                assert!((direct - logd).abs() <= 1e-12 * direct.abs().max(1.0), "{fam:?} z={z}");
            }
        }
    }

    #[test]
    fn grid_layout() {
        let g = BinGrid::new(4).unwrap();
        assert_eq!(g.thresholds(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.open_bin_of(0.1), Some(3));
        assert_eq!(g.open_bin_of(0.0), None);
        assert_eq!(g.open_bin_of(1.5), None);
        assert!(BinGrid::new(1).is_err());
        let g = BinGrid::new(7).unwrap();
        assert_eq!(g.thresholds()[7], 1.0);
    }

    #[test]
    fn symmetric_about_center() {
        let g = BinGrid::new(4).unwrap();
        for &s in &[0.01, 0.3, 2.0, 50.0] {
            let p = head_probs(&g, &LocationScale::new(Family::Normal, 0.0, s).unwrap());
            let p = p.as_slice();
            assert!((p[0] - p[3]).abs() < 1e-12 && (p[1] - p[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn concentrates_with_small_scale() {
        let g = BinGrid::new(4).unwrap();
        let p = head_probs(&g, &LocationScale::new(Family::Normal, 0.75, 1e-3).unwrap());
        assert!(p.as_slice()[3] > 1.0 - 1e-12);
        assert!(p.as_slice()[..3].iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn far_location_keeps_order() {
        // every bin is hundreds of scales away; the nearest bin still wins
        let g = BinGrid::new(5).unwrap();
        let p = head_probs(&g, &LocationScale::new(Family::Normal, -3.0, 1e-3).unwrap());
        assert_eq!(p.argmax_class(), 1);
        assert!(p.is_unimodal());
        let p = head_probs(&g, &LocationScale::new(Family::Cauchy, 3.0, 1e-3).unwrap());
        assert_eq!(p.argmax_class(), 5);
        assert!(p.is_unimodal());
    }

    #[test]
    fn underflow_floor_gives_uniform() {
        assert_eq!(normalize(&[f64::NEG_INFINITY; 4]), vec![0.25; 4]);
    }

    #[test]
    fn grad_sums_to_zero_and_center_symmetry() {
        let g = BinGrid::new(5).unwrap();
        for fam in Family::ALL {
            let j = head_grad(&g, &LocationScale::new(fam, 0.0, 0.4).unwrap());
            assert!(j.d_mu[2].abs() < 1e-12);
            assert!(j.d_mu.iter().sum::<f64>().abs() < 1e-12);
            assert!(j.d_sigma.iter().sum::<f64>().abs() < 1e-12);
            let p = head_probs(&g, &LocationScale::new(fam, 0.0, 0.4).unwrap());
            for (a, b) in j.probs.iter().zip(p.as_slice()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn lemma_inequalities_examples() {
        let g4 = BinGrid::new(4).unwrap();
        let ls = LocationScale::new(Family::Normal, 0.1, 0.3).unwrap();
        assert!(verify_sub_bin_inequalities(&g4, &ls).unwrap());
        let g8 = BinGrid::new(8).unwrap();
        let ls = LocationScale::new(Family::Logistic, -0.6, 0.05).unwrap();
        assert!(verify_sub_bin_inequalities(&g8, &ls).unwrap());
        for fam in Family::ALL {
            // bin midpoints, including the last bin (mirrored)
            for mid in [-0.75, -0.25, 0.25, 0.75] {
                let ls = LocationScale::new(fam, mid, 0.2).unwrap();
                assert!(verify_sub_bin_inequalities(&g4, &ls).unwrap());
            }
        }
    }

    #[test]
    fn lemma_precondition() {
        let g4 = BinGrid::new(4).unwrap();
        for mu in [-0.5, 0.0, 1.0, 1.2, -3.0] {
            let ls = LocationScale::new(Family::Normal, mu, 0.3).unwrap();
            assert!(verify_sub_bin_inequalities(&g4, &ls).is_err(), "mu={mu}");
        }
    }

    #[test]
    fn quadrature_agrees_with_cdf_differences() {
        let fam = Family::Logistic;
        let v = integrate(&|x| fam.std_pdf(x), -1.0, 2.0, 1e-15);
        let want = fam.std_cdf(2.0) - fam.std_cdf(-1.0);
        assert!((v - want).abs() < 1e-13);
    }

    #[test]
    fn location_scale_validation() {
        assert!(LocationScale::new(Family::Normal, 0.0, 1e-4).is_err());
        assert!(LocationScale::new(Family::Normal, f64::NAN, 1.0).is_err());
        let ls = LocationScale::from_raw(Family::Normal, 0.0, -1000.0);
        assert!(ls.sigma >= SIGMA_FLOOR);
        assert!(is_unimodal(head_probs(&BinGrid::new(3).unwrap(), &ls).as_slice()));
    }
}
