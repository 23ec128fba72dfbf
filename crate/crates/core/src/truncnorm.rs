//! Truncated normal variates.
//!
//! Inverse-CDF sampling is used while the region keeps non-negligible mass;
//! once the region starts 5 standard deviations or more from the mean the
//! exponential-rejection sampler of Robert (1995) takes over, because the
//! CDF values there no longer resolve the interval.

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::normal;

const TAIL_START: f64 = 5.0;

/// Draw from `N(mean, sd²)` restricted to `(lo, hi]`.
///
/// `lo` may be `-∞` and `hi` may be `+∞`. The returned value lies strictly
/// above `lo` and not above `hi`.
pub fn sample<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(sd > 0.0 && lo < hi);
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let x = standard(a, b, rng);
    let z = mean + sd * x;
    clamp_into(z, lo, hi)
}

/// Draw from the standard normal restricted to `(a, b)`.
pub fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= TAIL_START {
        upper_tail(a, b, rng)
    } else if b <= -TAIL_START {
        -upper_tail(-b, -a, rng)
    } else if a > 0.0 {
        // work on the survival side to keep precision for positive bounds
        let (qa, qb) = (normal::sf(a), normal::sf(b));
        let u: f64 = Open01.sample(rng);
        normal::inv_sf(qb + u * (qa - qb)).clamp(a, b)
    } else {
        let (pa, pb) = (normal::cdf(a), normal::cdf(b));
        let u: f64 = Open01.sample(rng);
        normal::inv_cdf(pa + u * (pb - pa)).clamp(a, b)
    }
}

/// Robert's sampler for `(a, b)` with `a ≥ 5`: propose from a translated
/// exponential with the optimal rate, truncated to the interval, and accept
/// with probability `exp(-(x - λ)²/2)`.
fn upper_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    // mass of the exponential proposal inside the interval
    let keep = if width.is_finite() { -(-lambda * width).exp_m1() } else { 1.0 };
    loop {
        let u: f64 = Open01.sample(rng);
        let x = a - (-u * keep).ln_1p() / lambda;
        let v: f64 = Open01.sample(rng);
        let r = x - lambda;
        if v.ln() <= -0.5 * r * r {
            return x.min(b);
        }
    }
}

fn clamp_into(z: f64, lo: f64, hi: f64) -> f64 {
    if z <= lo {
        let up = lo.next_up();
        if up <= hi {
            up
        } else {
            hi
        }
    } else if z > hi {
        hi
    } else {
        z
    }
}
