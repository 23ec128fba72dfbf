//! Standard normal distribution functions.
//!
//! Everything the likelihood touches is evaluated in log space so that
//! probabilities of far-tail bands stay finite and strictly ordered. `Φ` and
//! its complement go through `erfc`, which keeps full relative precision in
//! both tails; below `t = -30` the log-CDF switches to the asymptotic series.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc_inv;

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const ASYMPTOTIC_BELOW: f64 = -30.0;

#[inline]
fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Density `φ(t)`.
#[inline]
pub fn pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

#[inline]
pub fn ln_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// `Φ(t)`.
#[inline]
pub fn cdf(t: f64) -> f64 {
    0.5 * erfc(-t / SQRT_2)
}

/// Upper tail `1 - Φ(t)`, computed without cancellation.
#[inline]
pub fn sf(t: f64) -> f64 {
    0.5 * erfc(t / SQRT_2)
}

/// `ln Φ(t)`, finite for every finite `t`.
pub fn ln_cdf(t: f64) -> f64 {
    if t == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if t < ASYMPTOTIC_BELOW {
        // Mills-ratio expansion: Φ(t) = φ(t)/|t| · (1 - 1/t² + 3/t⁴ - 15/t⁶ + 105/t⁸ - ...)
        let t2 = 1.0 / (t * t);
        let series = 1.0 - t2 * (1.0 - 3.0 * t2 * (1.0 - 5.0 * t2 * (1.0 - 7.0 * t2)));
        return -0.5 * t * t - (-t).ln() - LN_SQRT_2PI + series.ln();
    }
    if t > 0.0 {
        (-sf(t)).ln_1p()
    } else {
        cdf(t).ln()
    }
}

/// `ln(1 - Φ(t))`.
#[inline]
pub fn ln_sf(t: f64) -> f64 {
    ln_cdf(-t)
}

/// Quantile function `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn inv_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -inv_cdf_lower(1.0 - p);
    }
    inv_cdf_lower(p)
}

/// `t` such that `1 - Φ(t) = q`; precise when `q` is tiny.
pub fn inv_sf(q: f64) -> f64 {
    -inv_cdf(q)
}

fn inv_cdf_lower(p: f64) -> f64 {
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // The starting value is good to ~1e-11; Newton against the CDF finishes it.
    for _ in 0..2 {
        let d = pdf(x);
        if !(d > 0.0) {
            break;
        }
        x -= (cdf(x) - p) / d;
    }
    x
}

/// `ln(1 - e^x)` for `x ≤ 0`.
#[inline]
pub fn ln1mexp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Φ(b) - Φ(a))` for standardized bounds `a < b` (either may be infinite).
pub fn ln_band_prob(a: f64, b: f64) -> f64 {
    debug_assert!(a < b, "band bounds out of order: {a} >= {b}");
    if b <= 0.0 {
        let lb = ln_cdf(b);
        if a == f64::NEG_INFINITY {
            lb
        } else {
            lb + ln1mexp(ln_cdf(a) - lb)
        }
    } else if a >= 0.0 {
        let la = ln_sf(a);
        if b == f64::INFINITY {
            la
        } else {
            la + ln1mexp(ln_sf(b) - la)
        }
    } else {
        let lower = if a == f64::NEG_INFINITY { 0.0 } else { cdf(a) };
        let upper = if b == f64::INFINITY { 0.0 } else { sf(b) };
        (1.0 - lower - upper).ln()
    }
}

/// `Φ(b) - Φ(a)`.
#[inline]
pub fn band_prob(a: f64, b: f64) -> f64 {
    ln_band_prob(a, b).exp()
}

/// `(ln Φ(t), ln(1 - Φ(t)))` sharing one `erfc` call in the central range.
#[inline]
pub fn ln_cdf_pair(t: f64) -> (f64, f64) {
    if t.abs() < 5.0 {
        if t < 0.0 {
            let lo = cdf(t);
            (lo.ln(), (-lo).ln_1p())
        } else {
            let hi = sf(t);
            ((-hi).ln_1p(), hi.ln())
        }
    } else {
        (ln_cdf(t), ln_sf(t))
    }
}

/// Log-density of `N(mean, var)` at `x`.
#[inline]
pub fn ln_normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (2.0 * PI * var).ln() - 0.5 * r * r / var
}
