use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use statrs::function::gamma::ln_gamma;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, floor_eigenvalues, sample_mvn, MvNormal};
use crate::model::{self, class_ln_probs, ln_mixture_sum, Cutpoints, Dataset, PriorSpec};
use crate::normal;
use crate::optim::{fd_hessian, maximize, LogTarget, OptimizerSettings};

const EIGEN_FLOOR: f64 = 1e-10;
const NONCONVERGED_INFLATION: f64 = 4.0;

/// Multivariate-t independence proposal centred at a conditional mode.
#[derive(Debug, Clone)]
pub struct TailoredProposal {
    location: DVector<f64>,
    covariance: DMatrix<f64>,
    dof: f64,
    chol_lower: DMatrix<f64>,
    precision: DMatrix<f64>,
    ln_norm: f64,
    converged: bool,
}

impl TailoredProposal {
    pub fn new(location: DVector<f64>, covariance: DMatrix<f64>, dof: f64) -> Result<Self> {
        let p = location.len();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::Dimension(format!("location has length {p}, covariance is {}x{}", covariance.nrows(), covariance.ncols())));
        }
        if !(dof > 0.0) {
            return Err(Error::Domain(format!("degrees of freedom must be positive, got {dof}")));
        }
        let chol = cholesky(&covariance, "proposal covariance")?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let precision = chol.inverse();
        let pf = p as f64;
        let ln_norm = ln_gamma(0.5 * (dof + pf)) - ln_gamma(0.5 * dof) - 0.5 * pf * (dof * std::f64::consts::PI).ln() - 0.5 * log_det;
        Ok(Self { location, covariance, dof, chol_lower, precision, ln_norm, converged: true })
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.location
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    /// Whether the mode search met its gradient tolerance.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let r = x - &self.location;
        let quad = r.dot(&(&self.precision * &r));
        self.ln_norm - 0.5 * (self.dof + x.len() as f64) * (quad / self.dof).ln_1p()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let zero = DVector::zeros(self.location.len());
        let e = sample_mvn(&zero, &self.chol_lower, rng);
        let w: f64 = ChiSquared::new(self.dof).expect("positive dof").sample(rng);
        &self.location + e * (self.dof / w).sqrt()
    }
}

/// Build a tailored proposal for `target`: BFGS from `start`, curvature from
/// finite differences of the gradient at the mode.
pub fn tailor<T: LogTarget + ?Sized>(target: &T, start: DVector<f64>, dof: f64, settings: &OptimizerSettings) -> Result<TailoredProposal> {
    let found = maximize(target, start, settings);
    if !found.value.is_finite() || found.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("mode search reached a non-finite point (value {})", found.value)));
    }
    let neg_hess = -fd_hessian(target, &found.x);
    let (neg_hess, _) = floor_eigenvalues(&neg_hess, EIGEN_FLOOR);
    let cov = nalgebra::linalg::SymmetricEigen::new(neg_hess);
    let inv_vals = cov.eigenvalues.map(|v| 1.0 / v);
    let mut covariance = &cov.eigenvectors * DMatrix::from_diagonal(&inv_vals) * cov.eigenvectors.transpose();
    let (fixed, _) = floor_eigenvalues(&covariance, EIGEN_FLOOR);
    covariance = fixed;
    if !found.converged {
        log::warn!(
            "mode search stopped after {} iterations with gradient norm {:.3e}; inflating proposal covariance by {NONCONVERGED_INFLATION}",
            found.iterations,
            found.gradient.norm()
        );
        covariance *= NONCONVERGED_INFLATION;
    }
    let mut proposal = TailoredProposal::new(found.x, covariance, dof)?;
    proposal.converged = found.converged;
    Ok(proposal)
}

/// Conditional log posterior of `α` given `(β, σ², γ)` with the class labels
/// summed out.
pub struct AlphaKernel<'a> {
    w: &'a DMatrix<f64>,
    lp: [Vec<f64>; 2],
    prior: &'a MvNormal,
}

impl<'a> AlphaKernel<'a> {
    pub fn new(beta: &[DVector<f64>; 2], sigma2: &[f64; 2], cutpoints: &[Cutpoints; 2], data: &'a Dataset, prior: &'a PriorSpec) -> Self {
        let lp = [0, 1].map(|s| class_ln_probs(data, &beta[s], sigma2[s], &cutpoints[s]));
        Self { w: data.w(), lp, prior: &prior.alpha }
    }
}

impl LogTarget for AlphaKernel<'_> {
    fn dim(&self) -> usize {
        self.w.ncols()
    }

    fn value(&self, alpha: &DVector<f64>) -> f64 {
        let eta = self.w * alpha;
        ln_mixture_sum(&eta, &self.lp) + self.prior.ln_pdf(alpha)
    }

    fn value_and_gradient(&self, alpha: &DVector<f64>) -> (f64, DVector<f64>) {
        let eta = self.w * alpha;
        let mut value = 0.0;
        // d/dη of each term: φ(η)(P₂ - P₁) / [(1-Φ(η))P₁ + Φ(η)P₂]
        let mut d_eta = DVector::zeros(eta.len());
        for (i, &e) in eta.iter().enumerate() {
            let (a, b) = (self.lp[0][i], self.lp[1][i]);
            let (ln_q2, ln_q1) = normal::ln_cdf_pair(e);
            let term = normal::ln_add_exp(ln_q1 + a, ln_q2 + b);
            value += term;
            if a != b {
                let (hi, lo, sign) = if b > a { (b, a, 1.0) } else { (a, b, -1.0) };
                let ln_diff = hi + normal::ln1mexp(lo - hi);
                d_eta[i] = sign * (normal::ln_pdf(e) + ln_diff - term).exp();
            }
        }
        let grad = self.w.tr_mul(&d_eta) + self.prior.grad_ln_pdf(alpha);
        (value + self.prior.ln_pdf(alpha), grad)
    }
}

/// Tailored proposal for `α` given `(β, σ², γ)`. The mode search always starts
/// at the prior mean, so the proposal depends on the conditioning values only.
pub fn build_tailored_proposal(
    beta: &[DVector<f64>; 2],
    sigma2: &[f64; 2],
    cutpoints: &[Cutpoints; 2],
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
) -> Result<TailoredProposal> {
    let kernel = AlphaKernel::new(beta, sigma2, cutpoints, data, prior);
    tailor(&kernel, prior.alpha.mean().clone(), config.proposal_dof, &config.optimizer)
}

/// One independence Metropolis–Hastings step. Returns the new value and
/// whether the proposal was accepted.
pub fn draw_alpha_mh<T: LogTarget + ?Sized, R: Rng + ?Sized>(
    current: &DVector<f64>,
    proposal: &TailoredProposal,
    kernel: &T,
    rng: &mut R,
) -> (DVector<f64>, bool) {
    let candidate = proposal.sample(rng);
    let ln_ratio = kernel.value(&candidate) - kernel.value(current) + proposal.log_density(current) - proposal.log_density(&candidate);
    let u: f64 = rng.random();
    if ln_ratio >= 0.0 || u.ln() < ln_ratio {
        (candidate, true)
    } else {
        (current.clone(), false)
    }
}

/// Log posterior of `(β_s, δ_s)` given `σ_s²` over the observations currently
/// in class `s`, with the latent utilities integrated out.
pub struct BetaDeltaTarget<'a> {
    x: DMatrix<f64>,
    y: Vec<usize>,
    sigma: f64,
    n_categories: usize,
    prior_beta: &'a MvNormal,
    prior_delta: &'a MvNormal,
}

impl<'a> BetaDeltaTarget<'a> {
    /// `class` is `1` or `2`.
    pub fn new(class: u8, sigma2: f64, u: &[u8], data: &Dataset, prior: &'a PriorSpec) -> Self {
        let rows: Vec<usize> = (0..data.n()).filter(|&i| u[i] == class).collect();
        let s = class as usize - 1;
        Self {
            x: data.x().select_rows(rows.iter()),
            y: rows.iter().map(|&i| data.y()[i]).collect(),
            sigma: sigma2.sqrt(),
            n_categories: data.n_categories(),
            prior_beta: &prior.beta[s],
            prior_delta: &prior.delta[s],
        }
    }

    fn split(&self, theta: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
        let q = self.x.ncols();
        (theta.rows(0, q).into_owned(), theta.rows(q, theta.len() - q).iter().copied().collect())
    }

    pub fn join(beta: &DVector<f64>, delta: &[f64]) -> DVector<f64> {
        DVector::from_iterator(beta.len() + delta.len(), beta.iter().copied().chain(delta.iter().copied()))
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

impl LogTarget for BetaDeltaTarget<'_> {
    fn dim(&self) -> usize {
        self.x.ncols() + self.n_categories - 3
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let (beta, delta) = self.split(theta);
        let cut = Cutpoints::from_delta(delta.clone());
        let mu = &self.x * &beta;
        let ll: f64 = self.y.iter().zip(mu.iter()).map(|(&y, &m)| model::ln_class_cond_prob(y, m, self.sigma, &cut)).sum();
        ll + self.prior_beta.ln_pdf(&beta) + self.prior_delta.ln_pdf(&DVector::from_vec(delta))
    }

    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let (beta, delta) = self.split(theta);
        let cut = Cutpoints::from_delta(delta.clone());
        let gamma = cut.gamma();
        let jmax = self.n_categories;
        let mu = &self.x * &beta;
        let mut value = 0.0;
        let mut d_mu = DVector::zeros(mu.len());
        let mut d_gamma = vec![0.0; gamma.len()];
        for (i, (&y, &m)) in self.y.iter().zip(mu.iter()).enumerate() {
            let (lo, hi) = cut.band(y);
            let a = (lo - m) / self.sigma;
            let b = (hi - m) / self.sigma;
            let lp = normal::ln_band_prob(a, b);
            value += lp;
            let ra = if a.is_finite() { (normal::ln_pdf(a) - lp).exp() } else { 0.0 };
            let rb = if b.is_finite() { (normal::ln_pdf(b) - lp).exp() } else { 0.0 };
            d_mu[i] = (ra - rb) / self.sigma;
            // band of category y is (γ[J-y-1], γ[J-y]]
            if b.is_finite() {
                d_gamma[jmax - y] += rb / self.sigma;
            }
            if a.is_finite() {
                d_gamma[jmax - y - 1] -= ra / self.sigma;
            }
        }
        let g_beta = self.x.tr_mul(&d_mu) + self.prior_beta.grad_ln_pdf(&beta);
        let jac = model::cutpoint_jacobian(&delta);
        let delta_v = DVector::from_vec(delta);
        let g_delta = jac.tr_mul(&DVector::from_vec(d_gamma)) + self.prior_delta.grad_ln_pdf(&delta_v);
        let grad = Self::join(&g_beta, g_delta.as_slice());
        (value + self.prior_beta.ln_pdf(&beta) + self.prior_delta.ln_pdf(&delta_v), grad)
    }
}
