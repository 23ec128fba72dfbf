//! Test-side oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

pub fn phi(t: f64) -> f64 {
    Normal::standard().cdf(t)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log marginal likelihood of the intercept-only model with three categories,
/// `α ~ N(0, a0)`, `β_s ~ N(0, b0)`, `σ_s² ~ IG(shape, scale)`, by product-rule
/// quadrature on a tensor grid over `(α, β₁, log σ₁², β₂, log σ₂²)`.
///
/// With intercepts only, the likelihood depends on the category counts `n_j`
/// alone: `Π_j [(1−Φ(α)) a_j + Φ(α) b_j]^{n_j}` with `a`, `b` the class
/// probabilities. Expanding each factor binomially turns the 5-D grid sum
/// into `Σ_k Π_j C(n_j,k_j) · I(K) · M(n−k) · M(k)` where `I` is a 1-D sum over
/// the `α` grid and `M` a 2-D sum over one class's `(β, log σ²)` grid. The
/// rearrangement is exact, so this is the tensor-grid sum itself.
pub struct TinyOracle {
    pub a0: f64,
    pub b0: f64,
    pub shape: f64,
    pub scale: f64,
}

/// Category probabilities `(P₁, P₂, P₃)` of one class; category 1 is the top
/// band `(1, ∞)` and category 3 is `(−∞, 0]`.
fn class_probs(b: f64, s2: f64) -> [f64; 3] {
    let sd = s2.sqrt();
    let p3 = phi((0.0 - b) / sd);
    let p1 = phi((b - 1.0) / sd);
    [p1, (1.0 - p1 - p3).max(0.0), p3]
}

/// Moment table `M(m) = Σ_points w Π_j P_j^{m_j}` for every `m ≤ counts`.
struct Moments {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl Moments {
    fn new(counts: [usize; 3], points: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let dims = [counts[0] + 1, counts[1] + 1, counts[2] + 1];
        let mut values = vec![0.0; dims[0] * dims[1] * dims[2]];
        let mut pw = [Vec::new(), Vec::new(), Vec::new()];
        for (w, b, s2) in points {
            if w < 1e-300 {
                continue;
            }
            for (j, p) in class_probs(b, s2).into_iter().enumerate() {
                pw[j].clear();
                let mut acc = 1.0;
                for _ in 0..dims[j] {
                    pw[j].push(acc);
                    acc *= p;
                }
            }
            for m0 in 0..dims[0] {
                for m1 in 0..dims[1] {
                    let f01 = w * pw[0][m0] * pw[1][m1];
                    let base = (m0 * dims[1] + m1) * dims[2];
                    for m2 in 0..dims[2] {
                        values[base + m2] += f01 * pw[2][m2];
                    }
                }
            }
        }
        Self { dims, values }
    }

    fn ln_at(&self, m: [usize; 3]) -> f64 {
        self.values[(m[0] * self.dims[1] + m[1]) * self.dims[2] + m[2]].ln()
    }
}

impl TinyOracle {
    pub fn default_prior() -> Self {
        Self { a0: 3.0, b0: 1.0, shape: 4.3, scale: 1.3 }
    }

    fn ln_inv_gamma(&self, s2: f64) -> f64 {
        self.shape * self.scale.ln() - ln_gamma(self.shape) - (self.shape + 1.0) * s2.ln() - self.scale / s2
    }

    fn ln_normal(x: f64, var: f64) -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * x * x / var
    }

    /// Grid over `t = log σ²` with weights `h · IG-density(e^t) · e^t`.
    fn sigma_grid(&self, step: f64) -> Vec<(f64, f64)> {
        let (t_lo, t_hi) = (-9.0, 5.0);
        let nt = ((t_hi - t_lo) / step).ceil() as i64;
        (0..=nt)
            .map(|it| {
                let t = t_lo + it as f64 * step;
                (t.exp(), (step.ln() + self.ln_inv_gamma(t.exp()) + t).exp())
            })
            .collect()
    }

    fn beta_grid(&self, step: f64) -> Vec<(f64, f64)> {
        let nb = (9.0 * self.b0.sqrt() / step).ceil() as i64;
        (-nb..=nb)
            .map(|i| {
                let b = i as f64 * step;
                (b, (step.ln() + Self::ln_normal(b, self.b0)).exp())
            })
            .collect()
    }

    /// Moments with `(β, σ²)` integrated against the prior.
    fn full_moments(&self, counts: [usize; 3], step: f64) -> Moments {
        let betas = self.beta_grid(step);
        let sigmas = self.sigma_grid(step);
        Moments::new(counts, betas.iter().flat_map(|&(b, wb)| sigmas.iter().map(move |&(s2, ws)| (wb * ws, b, s2))))
    }

    /// Moments at fixed `β` with `σ²` integrated against the prior.
    fn beta_moments(&self, counts: [usize; 3], b: f64, step: f64) -> Moments {
        Moments::new(counts, self.sigma_grid(step).into_iter().map(|(s2, ws)| (ws, b, s2)))
    }

    fn point_moments(counts: [usize; 3], b: f64, s2: f64) -> Moments {
        Moments::new(counts, std::iter::once((1.0, b, s2)))
    }

    /// `ln Σ_k Π_j C(n_j,k_j) Φ(α)^K (1−Φ(α))^{n−K} M₁(n−k) M₂(k)`.
    fn ln_given_alpha(counts: [usize; 3], alpha: f64, m1: &Moments, m2: &Moments) -> f64 {
        let n: usize = counts.iter().sum();
        let (lq2, lq1) = (phi(alpha).ln(), phi(-alpha).ln());
        let mut terms = Vec::new();
        for k0 in 0..=counts[0] {
            for k1 in 0..=counts[1] {
                for k2 in 0..=counts[2] {
                    let k = [k0, k1, k2];
                    let rest = [counts[0] - k0, counts[1] - k1, counts[2] - k2];
                    let kk = k0 + k1 + k2;
                    let ln_c: f64 = (0..3).map(|j| ln_choose(counts[j], k[j])).sum();
                    terms.push(ln_c + kk as f64 * lq2 + (n - kk) as f64 * lq1 + m1.ln_at(rest) + m2.ln_at(k));
                }
            }
        }
        ln_sum_exp(&terms)
    }

    /// `counts[j]` is the number of observations in category `j+1` (top band first).
    pub fn log_ml(&self, counts: [usize; 3], step: f64) -> f64 {
        let n: usize = counts.iter().sum();
        // α grid: I(K) = Σ_α w(α) Φ(α)^K (1−Φ(α))^{n−K}
        let na = (14.0 * self.a0.sqrt() / step).ceil() as i64;
        let mut ln_i = vec![Vec::new(); n + 1];
        for i in -na..=na {
            let a = i as f64 * step;
            let lw = step.ln() + Self::ln_normal(a, self.a0);
            let (lq2, lq1) = (phi(a).ln(), phi(-a).ln());
            for (k, acc) in ln_i.iter_mut().enumerate() {
                acc.push(lw + k as f64 * lq2 + (n - k) as f64 * lq1);
            }
        }
        let ln_i: Vec<f64> = ln_i.iter().map(|v| ln_sum_exp(v)).collect();
        let m = self.full_moments(counts, step);
        let mut terms = Vec::new();
        for k0 in 0..=counts[0] {
            for k1 in 0..=counts[1] {
                for k2 in 0..=counts[2] {
                    let k = [k0, k1, k2];
                    let rest = [counts[0] - k0, counts[1] - k1, counts[2] - k2];
                    let ln_c: f64 = (0..3).map(|j| ln_choose(counts[j], k[j])).sum();
                    terms.push(ln_c + ln_i[k0 + k1 + k2] + m.ln_at(rest) + m.ln_at(k));
                }
            }
        }
        ln_sum_exp(&terms)
    }

    /// `ln π(α*|y)`.
    pub fn log_alpha_ordinate(&self, counts: [usize; 3], alpha: f64, step: f64) -> f64 {
        let m = self.full_moments(counts, step);
        Self::ln_normal(alpha, self.a0) + Self::ln_given_alpha(counts, alpha, &m, &m) - self.log_ml(counts, step)
    }

    /// `ln π(β₁*, β₂*|α*, y)`.
    pub fn log_beta_ordinate(&self, counts: [usize; 3], alpha: f64, beta: [f64; 2], step: f64) -> f64 {
        let m = self.full_moments(counts, step);
        let m1 = self.beta_moments(counts, beta[0], step);
        let m2 = self.beta_moments(counts, beta[1], step);
        Self::ln_normal(beta[0], self.b0) + Self::ln_normal(beta[1], self.b0) + Self::ln_given_alpha(counts, alpha, &m1, &m2)
            - Self::ln_given_alpha(counts, alpha, &m, &m)
    }

    /// `ln π(σ₁²*, σ₂²*|α*, β*, y)`.
    pub fn log_sigma2_ordinate(&self, counts: [usize; 3], alpha: f64, beta: [f64; 2], sigma2: [f64; 2], step: f64) -> f64 {
        let m1 = self.beta_moments(counts, beta[0], step);
        let m2 = self.beta_moments(counts, beta[1], step);
        let p1 = Self::point_moments(counts, beta[0], sigma2[0]);
        let p2 = Self::point_moments(counts, beta[1], sigma2[1]);
        self.ln_inv_gamma(sigma2[0]) + self.ln_inv_gamma(sigma2[1]) + Self::ln_given_alpha(counts, alpha, &p1, &p2)
            - Self::ln_given_alpha(counts, alpha, &m1, &m2)
    }
}

use lcop_core::samplers::PosteriorSample;
use lcop_core::sim::SimSpec;

/// Intercept-only design with three categories used by the quadrature checks.
pub fn tiny_spec(seed: u64) -> SimSpec {
    SimSpec {
        n: 40,
        alpha: vec![0.3],
        beta: [vec![1.2], vec![-0.2]],
        sigma2: [0.3, 0.5],
        w_laws: vec![],
        x_laws: vec![],
        n_categories: 3,
        delta: [vec![], vec![]],
        seed,
    }
}

pub fn category_counts(y: &[usize]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for &v in y {
        counts[v - 1] += 1;
    }
    counts
}

/// Draws rendered the way an output file would store them.
pub fn draws_csv(sample: &PosteriorSample) -> String {
    let mut out = String::new();
    for row in sample.matrix() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
