//! Single-block conditional updates shared by both samplers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::proposal::{tailor, BetaDeltaTarget};
use super::RunConfig;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, MvNormal};
use crate::model::{class_ln_probs, Cutpoints, Dataset, PriorSpec};
use crate::normal;
use crate::optim::LogTarget;
use crate::truncnorm;

fn check_class(class: u8) -> Result<usize> {
    match class {
        1 | 2 => Ok(class as usize - 1),
        other => Err(Error::Contract(format!("class must be 1 or 2, got {other}"))),
    }
}

/// Normal full conditional of `β_s` given the latent utilities and labels:
/// `B̂ = (B₀⁻¹ + X_s'X_s/σ²)⁻¹`, `β̂ = B̂(B₀⁻¹β₀ + X_s'z_s/σ²)`.
pub fn beta_full_conditional(class: u8, z: &[f64], u: &[u8], sigma2_s: f64, prior: &PriorSpec, data: &Dataset) -> Result<MvNormal> {
    let s = check_class(class)?;
    let pb = &prior.beta[s];
    let q = data.q();
    let mut xtx = DMatrix::<f64>::zeros(q, q);
    let mut xtz = DVector::<f64>::zeros(q);
    for i in (0..data.n()).filter(|&i| u[i] == class) {
        let row = data.x().row(i);
        xtx += row.transpose() * row;
        xtz += row.transpose() * z[i];
    }
    let precision = pb.precision() + xtx / sigma2_s;
    let cov = spd_inverse(&precision, "beta conditional precision")?;
    let mean = &cov * (pb.precision() * pb.mean() + xtz / sigma2_s);
    MvNormal::new(mean, cov)
}

/// Draw `β_s` (`class ∈ {1, 2}`) from its full conditional. An empty class
/// yields a prior draw.
pub fn draw_beta<R: Rng + ?Sized>(
    class: u8,
    z: &[f64],
    u: &[u8],
    sigma2_s: f64,
    prior: &PriorSpec,
    data: &Dataset,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(beta_full_conditional(class, z, u, sigma2_s, prior, data)?.sample(rng))
}

/// Shape and scale of the inverse-gamma full conditional of `σ_s²`:
/// `((v + n_s)/2, (d + ‖z_s − X_sβ_s‖²)/2)`.
pub fn sigma2_full_conditional(class: u8, z: &[f64], u: &[u8], beta_s: &DVector<f64>, prior: &PriorSpec, data: &Dataset) -> Result<(f64, f64)> {
    check_class(class)?;
    let mut n_s = 0usize;
    let mut ssr = 0.0;
    for i in (0..data.n()).filter(|&i| u[i] == class) {
        let r = z[i] - data.x().row(i).transpose().dot(beta_s);
        ssr += r * r;
        n_s += 1;
    }
    Ok(((prior.v + n_s as f64) / 2.0, (prior.d + ssr) / 2.0))
}

/// Inverse-gamma draw with the given shape and scale.
pub(crate) fn draw_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale).expect("positive shape and scale").sample(rng);
    1.0 / g
}

pub fn draw_sigma2<R: Rng + ?Sized>(class: u8, z: &[f64], u: &[u8], beta_s: &DVector<f64>, prior: &PriorSpec, data: &Dataset, rng: &mut R) -> Result<f64> {
    let (shape, scale) = sigma2_full_conditional(class, z, u, beta_s, prior, data)?;
    Ok(draw_inv_gamma(shape, scale, rng))
}

/// Class labels from `Bernoulli(K_i)` with
/// `K_i = Φ(w_i'α)P_{y_i|2} / [(1−Φ(w_i'α))P_{y_i|1} + Φ(w_i'α)P_{y_i|2}]`.
pub fn draw_class_indicators<R: Rng + ?Sized>(
    alpha: &DVector<f64>,
    beta: &[DVector<f64>; 2],
    sigma2: &[f64; 2],
    cutpoints: &[Cutpoints; 2],
    data: &Dataset,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let lp = [0, 1].map(|s| class_ln_probs(data, &beta[s], sigma2[s], &cutpoints[s]));
    let eta = data.w() * alpha;
    let mut u = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let (ln_q2, ln_q1) = normal::ln_cdf_pair(eta[i]);
        let t1 = ln_q1 + lp[0][i];
        let t2 = ln_q2 + lp[1][i];
        let total = normal::ln_add_exp(t1, t2);
        if total == f64::NEG_INFINITY || total.is_nan() {
            return Err(Error::Contract(format!("observation {} has zero likelihood under both classes", i + 1)));
        }
        let k = (t2 - total).exp();
        let v: f64 = rng.random();
        u.push(if v < k { 2 } else { 1 });
    }
    Ok(u)
}

/// Latent utilities `z_i ~ N(x_i'β_{s_i}, σ²_{s_i})` truncated to the band of `y_i`.
pub fn draw_latent_z<R: Rng + ?Sized>(
    beta: &[DVector<f64>; 2],
    sigma2: &[f64; 2],
    cutpoints: &[Cutpoints; 2],
    data: &Dataset,
    u: &[u8],
    rng: &mut R,
) -> Vec<f64> {
    let mu = [data.x() * &beta[0], data.x() * &beta[1]];
    let sd = [sigma2[0].sqrt(), sigma2[1].sqrt()];
    (0..data.n())
        .map(|i| {
            let s = u[i] as usize - 1;
            let (lo, hi) = cutpoints[s].band(data.y()[i]);
            truncnorm::sample(mu[s][i], sd[s], lo, hi, rng)
        })
        .collect()
}

/// Joint tailored Metropolis–Hastings update of `(β_s, δ_s)` for `J > 3`,
/// targeting the class-`s` ordinal likelihood with the utilities integrated
/// out. Returns the new pair and whether the proposal was accepted.
#[allow(clippy::too_many_arguments)]
pub fn draw_beta_delta_joint<R: Rng + ?Sized>(
    class: u8,
    beta_s: &DVector<f64>,
    delta_s: &[f64],
    sigma2_s: f64,
    u: &[u8],
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    rng: &mut R,
) -> Result<(DVector<f64>, Vec<f64>, bool)> {
    let s = check_class(class)?;
    if data.n_categories() <= 3 {
        return Err(Error::Contract("the joint (beta, delta) block needs J > 3; use draw_beta for J = 3".into()));
    }
    let target = BetaDeltaTarget::new(class, sigma2_s, u, data, prior);
    if target.n_obs() == 0 {
        // empty class: the exact conditional is the prior
        let b = prior.beta[s].sample(rng);
        let d = prior.delta[s].sample(rng);
        return Ok((b, d.iter().copied().collect(), true));
    }
    let start = BetaDeltaTarget::join(prior.beta[s].mean(), prior.delta[s].mean().as_slice());
    let proposal = tailor(&target, start, config.proposal_dof, &config.optimizer)?;
    let current = BetaDeltaTarget::join(beta_s, delta_s);
    let candidate = proposal.sample(rng);
    let ln_ratio = target.value(&candidate) - target.value(&current) + proposal.log_density(&current) - proposal.log_density(&candidate);
    let v: f64 = rng.random();
    let q = beta_s.len();
    if ln_ratio >= 0.0 || v.ln() < ln_ratio {
        Ok((candidate.rows(0, q).into_owned(), candidate.iter().skip(q).copied().collect(), true))
    } else {
        Ok((beta_s.clone(), delta_s.to_vec(), false))
    }
}

/// Class-layer utilities `l_i ~ N(w_i'α, 1)` truncated to `(0, ∞)` when
/// `s_i = 2` and `(−∞, 0]` when `s_i = 1`.
pub fn draw_l<R: Rng + ?Sized>(alpha: &DVector<f64>, u: &[u8], data: &Dataset, rng: &mut R) -> Vec<f64> {
    let eta = data.w() * alpha;
    (0..data.n())
        .map(|i| {
            if u[i] == 2 {
                truncnorm::sample(eta[i], 1.0, 0.0, f64::INFINITY, rng)
            } else {
                truncnorm::sample(eta[i], 1.0, f64::NEG_INFINITY, 0.0, rng)
            }
        })
        .collect()
}

/// Normal full conditional of `α` given `l`: `N(Â(A₀⁻¹α₀ + W'l), Â)` with
/// `Â = (A₀⁻¹ + W'W)⁻¹`.
pub fn alpha_full_conditional(l: &[f64], data: &Dataset, prior: &PriorSpec) -> Result<MvNormal> {
    let w = data.w();
    let precision = prior.alpha.precision() + w.tr_mul(w);
    let cov = spd_inverse(&precision, "alpha conditional precision")?;
    let mean = &cov * (prior.alpha.precision() * prior.alpha.mean() + w.tr_mul(&DVector::from_column_slice(l)));
    MvNormal::new(mean, cov)
}

pub fn draw_alpha_given_l<R: Rng + ?Sized>(l: &[f64], data: &Dataset, prior: &PriorSpec, rng: &mut R) -> Result<DVector<f64>> {
    Ok(alpha_full_conditional(l, data, prior)?.sample(rng))
}
