//! Domain types and closed-form probabilities of the two-class latent-class
//! ordinal probit model.
//!
//! Class membership follows a binary probit, `P(s_i = 2) = Φ(w_i'α)`.
//! Within class `s` the latent utility is `z = x_i'β_s + ε`, `ε ~ N(0, σ_s²)`,
//! and the observed category is the band of the cut-point partition that
//! contains `z`. Categories are numbered `1..=J` with category 1 in the
//! **top** band, `(γ_{J-1}, ∞)`, and category `J` in the bottom band
//! `(-∞, γ_1]`. The cut-points are identified by `γ_1 = 0`, `γ_{J-1} = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{has_full_column_rank, MvNormal};
use crate::normal;

/// Number of latent classes.
pub const N_CLASSES: usize = 2;

/// Observed ordinal outcomes together with both covariate blocks.
#[derive(Debug, Clone)]
pub struct Dataset {
    n_categories: usize,
    y: Vec<usize>,
    x: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl Dataset {
    /// `y` holds categories in `1..=n_categories`; `x` (n×q) and `w` (n×p)
    /// must carry an intercept column first.
    pub fn new(y: Vec<usize>, x: DMatrix<f64>, w: DMatrix<f64>, n_categories: usize) -> Result<Self> {
        let n = y.len();
        if n_categories < 3 {
            return Err(Error::Contract(format!("need at least 3 ordered categories, got {n_categories}")));
        }
        if x.nrows() != n || w.nrows() != n {
            return Err(Error::Dimension(format!(
                "y has {n} rows, X has {}, W has {}",
                x.nrows(),
                w.nrows()
            )));
        }
        if x.ncols() == 0 || w.ncols() == 0 {
            return Err(Error::Dimension("X and W need at least an intercept column".into()));
        }
        if let Some((i, &v)) = y.iter().enumerate().find(|(_, &v)| v == 0 || v > n_categories) {
            return Err(Error::Domain(format!("y[{i}] = {v} is outside 1..={n_categories}")));
        }
        for (name, m) in [("X", &x), ("W", &w)] {
            if let Some(i) = (0..n).find(|&i| m[(i, 0)] != 1.0) {
                return Err(Error::Contract(format!("first column of {name} must be 1 (row {i})")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("{name} contains non-finite values")));
            }
            if n > 0 && !has_full_column_rank(m) {
                return Err(Error::Contract(format!("{name} does not have full column rank")));
            }
        }
        let mut seen = vec![false; n_categories];
        for &v in &y {
            seen[v - 1] = true;
        }
        for (j, present) in seen.iter().enumerate() {
            if !present {
                log::warn!("category {} does not occur in the data", j + 1);
            }
        }
        Ok(Self { n_categories, y, x, w })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    /// Number of ordinal-layer covariates (columns of X).
    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    /// Number of class-layer covariates (columns of W).
    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn x_row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    pub fn w_row(&self, i: usize) -> DVector<f64> {
        self.w.row(i).transpose()
    }

    /// Concatenate two datasets with identical layout.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.q() != other.q() || self.p() != other.p() || self.n_categories != other.n_categories {
            return Err(Error::Dimension("datasets have different layouts".into()));
        }
        let n = self.n() + other.n();
        let stack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            DMatrix::from_fn(n, a.ncols(), |i, j| if i < a.nrows() { a[(i, j)] } else { b[(i - a.nrows(), j)] })
        };
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        Dataset::new(y, stack(&self.x, &other.x), stack(&self.w, &other.w), self.n_categories)
    }

    pub(crate) fn check_params(&self, theta: &ParamDraw) -> Result<()> {
        if theta.alpha.len() != self.p() {
            return Err(Error::Dimension(format!("alpha has length {}, W has {} columns", theta.alpha.len(), self.p())));
        }
        for s in 0..N_CLASSES {
            if theta.beta[s].len() != self.q() {
                return Err(Error::Dimension(format!(
                    "beta_{} has length {}, X has {} columns",
                    s + 1,
                    theta.beta[s].len(),
                    self.q()
                )));
            }
            if theta.cutpoints[s].n_categories() != self.n_categories {
                return Err(Error::Dimension(format!(
                    "cut-points of class {} describe {} categories, data has {}",
                    s + 1,
                    theta.cutpoints[s].n_categories(),
                    self.n_categories
                )));
            }
        }
        Ok(())
    }
}

/// Ordered cut-points of one class plus their unconstrained coordinates.
///
/// `gamma` has `J-1` entries with `gamma[0] = 0` and `gamma[J-2] = 1`. The
/// interior points are generated by stick-breaking: each interior point takes
/// the fraction `logistic(δ_k)` of the gap still left below 1, so any finite
/// `δ` yields a strictly increasing vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutpoints {
    gamma: Vec<f64>,
    delta: Vec<f64>,
}

impl Cutpoints {
    /// Cut-points for `J` categories at `δ = 0`; for `J = 3` this is `(0, 1)`.
    pub fn identified(n_categories: usize) -> Self {
        Self::from_delta(vec![0.0; n_categories.saturating_sub(3)])
    }

    pub fn from_delta(delta: Vec<f64>) -> Self {
        Self { gamma: cutpoints_from_delta(&delta), delta }
    }

    pub fn from_gamma(gamma: Vec<f64>) -> Result<Self> {
        let delta = delta_from_cutpoints(&gamma)?;
        Ok(Self { gamma, delta })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn n_categories(&self) -> usize {
        self.gamma.len() + 1
    }

    /// Latent-utility interval `(lo, hi]` of category `j ∈ 1..=J`.
    #[inline]
    pub fn band(&self, category: usize) -> (f64, f64) {
        let j = self.n_categories();
        debug_assert!((1..=j).contains(&category));
        let lo_idx = j - category;
        let hi_idx = j - category + 1;
        let lo = if lo_idx == 0 { f64::NEG_INFINITY } else { self.gamma[lo_idx - 1] };
        let hi = if hi_idx == j { f64::INFINITY } else { self.gamma[hi_idx - 1] };
        (lo, hi)
    }

    /// Category whose band contains `z`.
    pub fn category_of(&self, z: f64) -> usize {
        let below = self.gamma.iter().filter(|&&g| z > g).count();
        self.n_categories() - below
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Map `J-3` unconstrained coordinates to the `J-1` ordered cut-points.
pub fn cutpoints_from_delta(delta: &[f64]) -> Vec<f64> {
    let mut gamma = Vec::with_capacity(delta.len() + 2);
    gamma.push(0.0);
    let mut prev = 0.0;
    for &d in delta {
        let next = prev + (1.0 - prev) * logistic(d);
        gamma.push(next);
        prev = next;
    }
    gamma.push(1.0);
    gamma
}

/// Inverse of [`cutpoints_from_delta`].
pub fn delta_from_cutpoints(gamma: &[f64]) -> Result<Vec<f64>> {
    if gamma.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 cut-points, got {}", gamma.len())));
    }
    if gamma[0] != 0.0 || gamma[gamma.len() - 1] != 1.0 {
        return Err(Error::Domain("first cut-point must be 0 and last must be 1".into()));
    }
    if gamma.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(format!("cut-points are not strictly increasing: {gamma:?}")));
    }
    Ok(gamma[1..gamma.len() - 1]
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let prev = gamma[k];
            ((g - prev) / (1.0 - g)).ln()
        })
        .collect())
}

/// `∂γ/∂δ` as a `(J-1) × (J-3)` matrix.
pub(crate) fn cutpoint_jacobian(delta: &[f64]) -> DMatrix<f64> {
    let m = delta.len();
    let mut jac = DMatrix::zeros(m + 2, m);
    let mut prev = 0.0;
    for k in 0..m {
        let l = logistic(delta[k]);
        // γ_{k+1} = γ_k + (1 - γ_k) l
        for c in 0..k {
            jac[(k + 1, c)] = jac[(k, c)] * (1.0 - l);
        }
        jac[(k + 1, k)] = (1.0 - prev) * l * (1.0 - l);
        prev += (1.0 - prev) * l;
    }
    jac
}

/// Prior hyperparameters.
///
/// `α ~ N(α₀, A₀)`, `β_s ~ N(β₀ₛ, B₀ₛ)`, `σ_s² ~ IG(v/2, d/2)` and, when
/// `J > 3`, `δ_s ~ N(δ₀ₛ, D₀ₛ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub alpha: MvNormal,
    pub beta: [MvNormal; 2],
    pub v: f64,
    pub d: f64,
    pub delta: [MvNormal; 2],
}

impl PriorSpec {
    /// `α ~ N(0, 3I)`, `β_s ~ N(0, I)`, `σ_s² ~ IG(4.3, 1.3)`, `δ_s ~ N(0, I)`.
    pub fn default_for(p: usize, q: usize, n_categories: usize) -> Self {
        let m = n_categories.saturating_sub(3);
        let beta = MvNormal::isotropic(q, 1.0).expect("identity is SPD");
        let delta = MvNormal::isotropic(m, 1.0).expect("identity is SPD");
        Self {
            alpha: MvNormal::isotropic(p, 3.0).expect("identity is SPD"),
            beta: [beta.clone(), beta],
            v: 8.6,
            d: 2.6,
            delta: [delta.clone(), delta],
        }
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if !(self.v > 0.0 && self.d > 0.0) {
            return Err(Error::Domain(format!("inverse-gamma hyperparameters must be positive (v={}, d={})", self.v, self.d)));
        }
        if self.alpha.dim() != data.p() {
            return Err(Error::Dimension(format!("alpha prior has dimension {}, W has {} columns", self.alpha.dim(), data.p())));
        }
        let m = data.n_categories() - 3;
        for s in 0..N_CLASSES {
            if self.beta[s].dim() != data.q() {
                return Err(Error::Dimension(format!(
                    "beta_{} prior has dimension {}, X has {} columns",
                    s + 1,
                    self.beta[s].dim(),
                    data.q()
                )));
            }
            if self.delta[s].dim() != m {
                return Err(Error::Dimension(format!(
                    "delta_{} prior has dimension {}, expected {m}",
                    s + 1,
                    self.delta[s].dim()
                )));
            }
        }
        Ok(())
    }

    /// Shape and scale of the inverse-gamma prior on each `σ_s²`.
    pub fn sigma2_shape_scale(&self) -> (f64, f64) {
        (self.v / 2.0, self.d / 2.0)
    }

    /// Prior mean of `σ_s²` (finite when `v > 2`).
    pub fn sigma2_prior_mean(&self) -> f64 {
        self.d / (self.v - 2.0)
    }

    /// Whether the prior is invariant under exchanging the two class labels
    /// (with `α ↦ -α`).
    pub fn is_label_symmetric(&self) -> bool {
        let same = |a: &MvNormal, b: &MvNormal| a.mean() == b.mean() && a.cov() == b.cov();
        self.alpha.mean().iter().all(|&m| m == 0.0) && same(&self.beta[0], &self.beta[1]) && same(&self.delta[0], &self.delta[1])
    }

    /// Joint log prior density.
    pub fn ln_density(&self, theta: &ParamDraw) -> f64 {
        let (shape, scale) = self.sigma2_shape_scale();
        let mut lp = self.alpha.ln_pdf(&theta.alpha);
        for s in 0..N_CLASSES {
            lp += self.beta[s].ln_pdf(&theta.beta[s]);
            lp += ln_inv_gamma_pdf(theta.sigma2[s], shape, scale);
            if self.delta[s].dim() > 0 {
                lp += self.delta[s].ln_pdf(&DVector::from_column_slice(theta.cutpoints[s].delta()));
            }
        }
        lp
    }
}

/// Log-density of the inverse-gamma distribution with the given shape and scale.
pub fn ln_inv_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

/// One value of the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDraw {
    pub alpha: DVector<f64>,
    pub beta: [DVector<f64>; 2],
    pub sigma2: [f64; 2],
    pub cutpoints: [Cutpoints; 2],
}

impl ParamDraw {
    /// The same mixture with class labels exchanged: `(β₁,σ₁²,γ₁) ↔ (β₂,σ₂²,γ₂)`, `α ↦ -α`.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: -&self.alpha,
            beta: [self.beta[1].clone(), self.beta[0].clone()],
            sigma2: [self.sigma2[1], self.sigma2[0]],
            cutpoints: [self.cutpoints[1].clone(), self.cutpoints[0].clone()],
        }
    }

    /// All scalar parameters, in the order of [`param_names`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.alpha.iter().copied().collect();
        for b in &self.beta {
            out.extend(b.iter());
        }
        out.extend(self.sigma2);
        for c in &self.cutpoints {
            out.extend_from_slice(c.delta());
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(values: &[f64], p: usize, q: usize, n_categories: usize) -> Result<Self> {
        let m = n_categories - 3;
        let want = p + 2 * q + 2 + 2 * m;
        if values.len() != want {
            return Err(Error::Dimension(format!("expected {want} values, got {}", values.len())));
        }
        let mut it = values.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { (&mut it).take(k).collect() };
        let alpha = DVector::from_vec(take(p));
        let b1 = DVector::from_vec(take(q));
        let b2 = DVector::from_vec(take(q));
        let s2 = take(2);
        let d1 = take(m);
        let d2 = take(m);
        if s2.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!("variances must be positive, got {s2:?}")));
        }
        Ok(Self {
            alpha,
            beta: [b1, b2],
            sigma2: [s2[0], s2[1]],
            cutpoints: [Cutpoints::from_delta(d1), Cutpoints::from_delta(d2)],
        })
    }
}

/// Column names matching [`ParamDraw::flatten`].
pub fn param_names(p: usize, q: usize, n_categories: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|k| format!("alpha_{k}")).collect();
    for s in 1..=2 {
        names.extend((1..=q).map(|k| format!("beta{s}_{k}")));
    }
    names.push("sigma2_1".into());
    names.push("sigma2_2".into());
    for s in 1..=2 {
        names.extend((2..n_categories.saturating_sub(1)).map(|k| format!("delta{s}_{k}")));
    }
    names
}

/// Sampler state: parameters plus the latent variables of every observation.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub params: ParamDraw,
    /// Utility of the realized class for each observation.
    pub z: Vec<f64>,
    /// Class labels in `{1, 2}`.
    pub u: Vec<u8>,
    /// Class-layer utility (full Gibbs sampler only).
    pub l: Vec<f64>,
}

/// `(Q_i1, Q_i2)` with `Q_i2 = Φ(w_i'α)`.
pub fn class_prob(w_i: &DVector<f64>, alpha: &DVector<f64>) -> (f64, f64) {
    let eta = w_i.dot(alpha);
    (normal::sf(eta), normal::cdf(eta))
}

/// Category probabilities for latent mean `mu` and scale `sigma`.
pub fn class_cond_probs_at(mu: f64, sigma: f64, cut: &Cutpoints) -> Vec<f64> {
    (1..=cut.n_categories()).map(|j| ln_class_cond_prob(j, mu, sigma, cut).exp()).collect()
}

/// `ln P(y = j | s)` for latent mean `mu` and scale `sigma`.
#[inline]
pub fn ln_class_cond_prob(category: usize, mu: f64, sigma: f64, cut: &Cutpoints) -> f64 {
    let (lo, hi) = cut.band(category);
    normal::ln_band_prob((lo - mu) / sigma, (hi - mu) / sigma)
}

/// `P_{ij|s}` for `j = 1..=J`.
pub fn ordinal_class_cond_probs(x_i: &DVector<f64>, beta_s: &DVector<f64>, sigma_s: f64, cut: &Cutpoints) -> Result<Vec<f64>> {
    if !(sigma_s > 0.0) || !sigma_s.is_finite() {
        return Err(Error::Domain(format!("scale must be positive and finite, got {sigma_s}")));
    }
    if x_i.len() != beta_s.len() {
        return Err(Error::Dimension(format!("x has length {}, beta has {}", x_i.len(), beta_s.len())));
    }
    Ok(class_cond_probs_at(x_i.dot(beta_s), sigma_s, cut))
}

/// `P_ij = Σ_s P_{ij|s} Q_is`.
pub fn mixture_outcome_probs(x_i: &DVector<f64>, w_i: &DVector<f64>, theta: &ParamDraw) -> Result<Vec<f64>> {
    if w_i.len() != theta.alpha.len() {
        return Err(Error::Dimension(format!("w has length {}, alpha has {}", w_i.len(), theta.alpha.len())));
    }
    let (q1, q2) = class_prob(w_i, &theta.alpha);
    let p1 = ordinal_class_cond_probs(x_i, &theta.beta[0], theta.sigma2[0].sqrt(), &theta.cutpoints[0])?;
    let p2 = ordinal_class_cond_probs(x_i, &theta.beta[1], theta.sigma2[1].sqrt(), &theta.cutpoints[1])?;
    Ok(p1.iter().zip(&p2).map(|(a, b)| q1 * a + q2 * b).collect())
}

/// `ln P_{y_i|s}` for every observation.
pub fn class_ln_probs(data: &Dataset, beta_s: &DVector<f64>, sigma2_s: f64, cut: &Cutpoints) -> Vec<f64> {
    let mu = data.x() * beta_s;
    let sigma = sigma2_s.sqrt();
    data.y().iter().zip(mu.iter()).map(|(&y, &m)| ln_class_cond_prob(y, m, sigma, cut)).collect()
}

/// `ln P_{y_i|s}` for both classes.
pub(crate) fn both_class_ln_probs(data: &Dataset, theta: &ParamDraw) -> [Vec<f64>; 2] {
    [0, 1].map(|s| class_ln_probs(data, &theta.beta[s], theta.sigma2[s], &theta.cutpoints[s]))
}

/// `Σ_i ln[(1 - Φ(η_i)) e^{a_i} + Φ(η_i) e^{b_i}]` for `η = Wα`.
pub(crate) fn ln_mixture_sum(eta: &DVector<f64>, lp: &[Vec<f64>; 2]) -> f64 {
    eta.iter()
        .zip(lp[0].iter().zip(&lp[1]))
        .map(|(&e, (&a, &b))| {
            let (ln_q2, ln_q1) = normal::ln_cdf_pair(e);
            normal::ln_add_exp(ln_q1 + a, ln_q2 + b)
        })
        .sum()
}

fn check_sigma2(theta: &ParamDraw) -> Result<()> {
    if theta.sigma2.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::Domain(format!("variances must be positive, got {:?}", theta.sigma2)));
    }
    Ok(())
}

/// `Σ_i ln P_{i, y_i}`.
pub fn log_likelihood(data: &Dataset, theta: &ParamDraw) -> Result<f64> {
    data.check_params(theta)?;
    check_sigma2(theta)?;
    let lp = both_class_ln_probs(data, theta);
    let eta = data.w() * &theta.alpha;
    Ok(ln_mixture_sum(&eta, &lp))
}

/// `ln f(y | α, β, σ²) + ln N(α; α₀, A₀)`: the α-block target with the class
/// labels summed out.
pub fn log_posterior_kernel_alpha(
    alpha: &DVector<f64>,
    beta: &[DVector<f64>; 2],
    sigma2: &[f64; 2],
    cutpoints: &[Cutpoints; 2],
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<f64> {
    let theta = ParamDraw { alpha: alpha.clone(), beta: beta.clone(), sigma2: *sigma2, cutpoints: cutpoints.clone() };
    Ok(log_likelihood(data, &theta)? + prior.alpha.ln_pdf(alpha))
}
