//! Scalar special functions used by the heads and losses.

use std::f64::consts::PI;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Below this argument `erfc` is summed as a series, above it as a
/// continued fraction.
const SERIES_CUTOFF: f64 = 1.25;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < SERIES_CUTOFF {
        1.0 - erf_series(x)
    } else {
        exp_neg_sq(x) * erfcx_cf(x)
    }
}

/// `exp(-x^2)` without the rounding error of `x * x`: `x` is split into a
/// short-mantissa head, whose square is exact, and a tail.
fn exp_neg_sq(x: f64) -> f64 {
    let hi = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-hi * hi).exp() * (-(x - hi) * (x + hi)).exp()
}

/// `ln erfc(x)`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        erfc(x).ln()
    } else {
        -x * x + erfcx_cf(x).ln()
    }
}

/// `erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!` for `x >= 0`.
/// All terms are positive so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * exp_neg_sq(x) * sum
}

/// Scaled `exp(x^2) erfc(x)` for `x >= SERIES_CUTOFF` by the Laplace
/// continued fraction `1 / (x + (1/2) / (x + 1 / (x + (3/2) / (x + ...))))`,
/// evaluated with the modified Lentz method.
fn erfcx_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * PI.sqrt())
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `ln Phi(z)`; accurate in the lower tail.
pub fn std_normal_ln_cdf(z: f64) -> f64 {
    ln_erfc(-z / SQRT_2) - std::f64::consts::LN_2
}

pub fn std_normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * PI).ln()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln sum_i e^(x_i)`; `-inf` when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit values from an arbitrary-precision reference.
    const ERFC_REF: &[(f64, f64)] = &[
        (-3.0, 1.9999779095030014146),
        (-1.5, 1.9661051464753107271),
        (-0.5, 1.5204998778130465377),
        (0.0, 1.0),
        (0.3, 0.67137324054087258381),
        (0.9, 0.20309178757716786034),
        (1.0, 0.15729920705028513066),
        (1.7, 0.016209541409225439159),
        (2.2, 0.0018628462979818898586),
        (2.49, 0.00042928786773391290559),
        (2.5, 0.00040695201744495893956),
        (2.51, 0.00038570548172427977972),
        (3.0, 0.000022090496998585441373),
        (4.5, 1.9661604415428874763e-10),
        (6.0, 2.1519736712498913117e-17),
        (10.0, 2.088487583762544757e-45),
        (26.0, 5.6631924088561428465e-296),
    ];

    const LN_PHI_REF: &[(f64, f64)] = &[
        (-40.0, -804.60844201375378817),
        (-20.0, -203.91715537109726394),
        (-8.0, -35.013437159914549896),
        (-3.0, -6.6077262215103495433),
        (-1.0, -1.8410216450092635058),
        (0.0, -0.69314718055994530942),
        (1.0, -0.17275377902344988953),
    ];

    #[test]
    fn erfc_matches_reference() {
        for &(x, want) in ERFC_REF {
            let got = erfc(x);
            assert!((got - want).abs() <= 1e-12, "x={x}: {got} vs {want}");
            assert!(((got - want) / want).abs() < 1e-12, "x={x}: rel {}", (got - want) / want);
        }
    }

    #[test]
    fn ln_cdf_matches_reference() {
        for &(z, want) in LN_PHI_REF {
            let got = std_normal_ln_cdf(z);
            assert!(((got - want) / want).abs() < 1e-13, "z={z}: {got} vs {want}");
        }
        assert!((std_normal_cdf(1.0) - 0.84134474606854294859).abs() < 1e-15);
    }

    #[test]
    fn erfc_symmetry_and_limits() {
        assert_eq!(erfc(0.0), 1.0);
        for &x in &[0.1, 0.7, 1.3, 2.49, 2.51, 4.0] {
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-15);
        }
        assert_eq!(erfc(40.0), 0.0);
        assert_eq!(erfc(-40.0), 2.0);
        assert!(ln_erfc(40.0).is_finite());
    }

    #[test]
    fn helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!((ln_1m_exp(-1e-3) - (1.0 - (-1e-3f64).exp()).ln()).abs() < 1e-12);
        assert!((ln_1m_exp(-5.0) - (1.0 - (-5f64).exp()).ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }
}
