//! Marginal likelihood by the basic marginal likelihood identity
//! `ln m(y) = ln f(y|θ*) + ln π(θ*) − ln π(θ*|y)`, with the posterior ordinate
//! split as `π(α*|y) π(β*|α*, y) π(σ²*|α*, β*, y)`.
//!
//! The `α` ordinate uses the Metropolis–Hastings identity of Chib and
//! Jeliazkov: the numerator averages `Υ(α, α*) q(α*)` over the main run, the
//! denominator averages `Υ(α*, α†)` with `α† ~ q` over a reduced run that
//! holds `α` at `α*`. The same reduced run gives a Rao–Blackwellized estimate
//! of the `β` ordinate; a second reduced run that also fixes `β*` gives the
//! `σ²` ordinate.
//!
//! The estimator is implemented for three categories.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ln_inv_gamma_pdf, log_likelihood, Dataset, ParamDraw, PriorSpec};
use crate::normal::ln_add_exp;
use crate::optim::LogTarget;
use crate::samplers::{
    beta_full_conditional, build_tailored_proposal, initial_state, sigma2_full_conditional, AlphaKernel, PosteriorSample, RunConfig,
    SamplerKind, Sweeper, TailoredProposal,
};

/// Batches used for the Monte Carlo standard errors.
pub const N_BATCHES: usize = 20;
/// Fraction of each reduced run discarded as burn-in.
pub const REDUCED_BURN_FRACTION: f64 = 0.1;

/// Run-length settings of the reduced runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChibOptions {
    /// Retained sweeps per reduced run; `None` uses the main run's `G`.
    pub reduced_len: Option<usize>,
}

impl Default for ChibOptions {
    fn default() -> Self {
        Self { reduced_len: None }
    }
}

/// A log ordinate with its batch-means standard error (on the log scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrdinateEstimate {
    pub log_value: f64,
    pub mc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalLikelihoodResult {
    pub log_ml: f64,
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub log_ordinate_alpha: OrdinateEstimate,
    pub log_ordinate_beta: OrdinateEstimate,
    pub log_ordinate_sigma2: OrdinateEstimate,
    /// Flattened `θ*` in the order of `param_names`.
    pub theta_star: Vec<f64>,
    /// Standard error of `log_ml` from the three ordinates.
    pub mc_se: f64,
}

impl MarginalLikelihoodResult {
    /// `ln f(y|θ*) + ln π(θ*) − Σ ln ordinates`.
    pub fn assembled(&self) -> f64 {
        self.log_likelihood + self.log_prior
            - (self.log_ordinate_alpha.log_value + self.log_ordinate_beta.log_value + self.log_ordinate_sigma2.log_value)
    }
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log of the mean of `exp(terms)` with a batch-means standard error of that log.
pub fn log_mean_with_se(terms: &[f64]) -> Result<OrdinateEstimate> {
    let n = terms.len();
    if n == 0 {
        return Err(Error::Contract("no terms to average".into()));
    }
    let total = ln_sum_exp(terms);
    if total == f64::NEG_INFINITY || total.is_nan() {
        return Err(Error::Numerical("every term of the ordinate average vanished".into()));
    }
    let log_value = total - (n as f64).ln();
    let mc_se = if n >= 2 * N_BATCHES {
        let size = n / N_BATCHES;
        // batch means relative to the overall mean
        let rel: Vec<f64> = (0..N_BATCHES)
            .map(|b| {
                let chunk = &terms[b * size..(b + 1) * size];
                (ln_sum_exp(chunk) - (size as f64).ln() - log_value).exp()
            })
            .collect();
        let m = rel.iter().sum::<f64>() / N_BATCHES as f64;
        let var = rel.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (N_BATCHES as f64 - 1.0);
        // delta method: se(ln x̄) ≈ se(x̄)/x̄
        (var / N_BATCHES as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(OrdinateEstimate { log_value, mc_se })
}

fn ln_mh_prob(kernel: &AlphaKernel<'_>, prop: &TailoredProposal, from: &DVector<f64>, to: &DVector<f64>) -> f64 {
    let r = kernel.value(to) - kernel.value(from) + prop.log_density(from) - prop.log_density(to);
    r.min(0.0)
}

/// Output of a reduced run with `α` held at `α*`.
#[derive(Debug, Clone)]
pub struct ReducedRun {
    /// Parameters at the end of each retained sweep (`α = α*`).
    pub draws: Vec<ParamDraw>,
    /// `ln Υ(α*, α†)` with `α† ~ q(·|β, σ²)` at each retained sweep.
    pub ln_accept: Vec<f64>,
    /// `ln Π_s N(β*_s | β̂_s, B̂_s)` at each retained sweep, if `β*` was given.
    pub ln_beta_terms: Option<Vec<f64>>,
}

fn check_supported(data: &Dataset) -> Result<()> {
    if data.n_categories() != 3 {
        return Err(Error::Contract(format!(
            "the marginal-likelihood estimator supports three categories only, got {}",
            data.n_categories()
        )));
    }
    Ok(())
}

fn reduced_len(config: &RunConfig, options: &ChibOptions) -> (usize, usize) {
    let len = options.reduced_len.unwrap_or(config.retained()).max(1);
    let burn = (REDUCED_BURN_FRACTION * len as f64).round() as usize;
    (len, burn)
}

/// Reduced run with `α = α*`, refreshing `β`, `σ²`, `u` and `z`.
pub fn alpha_fixed_run(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    options: &ChibOptions,
    alpha_star: &DVector<f64>,
    beta_star: Option<&[DVector<f64>; 2]>,
) -> Result<ReducedRun> {
    check_supported(data)?;
    config.validate()?;
    prior.validate(data)?;
    let (len, burn) = reduced_len(config, options);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut state = initial_state(data, prior, &mut rng);
    state.params.alpha = alpha_star.clone();
    let mut sweeper = Sweeper::new(data, prior, config, SamplerKind::Collapsed);
    sweeper.fix_alpha = true;
    sweeper.label_exchange = true;
    let mut draws = Vec::with_capacity(len);
    let mut ln_accept = Vec::with_capacity(len);
    let mut beta_terms = beta_star.map(|_| Vec::with_capacity(len));
    for iter in 0..burn + len {
        sweeper.sweep(&mut state, &mut rng)?;
        if iter < burn {
            continue;
        }
        let p = &state.params;
        let prop = build_tailored_proposal(&p.beta, &p.sigma2, &p.cutpoints, data, prior, config)?;
        let kernel = AlphaKernel::new(&p.beta, &p.sigma2, &p.cutpoints, data, prior);
        let dagger = prop.sample(&mut rng);
        ln_accept.push(ln_mh_prob(&kernel, &prop, alpha_star, &dagger));
        if let (Some(terms), Some(bs)) = (beta_terms.as_mut(), beta_star) {
            let mut t = 0.0;
            for (s, class) in [(0usize, 1u8), (1, 2)] {
                let cond = beta_full_conditional(class, &state.z, &state.u, p.sigma2[s], prior, data)?;
                t += cond.ln_pdf(&bs[s]);
            }
            terms.push(t);
        }
        draws.push(state.params.clone());
    }
    Ok(ReducedRun { draws, ln_accept, ln_beta_terms: beta_terms })
}

/// `ln π(α*|y)` from the main run (numerator) and a reduced run (denominator).
///
/// With a label-symmetric prior the posterior is invariant to exchanging the
/// classes, so the numerator averages each relabeled draw together with its
/// mirror image; for the mirror, the proposal and kernel are those of the
/// draw evaluated at `−α*`.
pub fn alpha_ordinate_from(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    main_sample: &PosteriorSample,
    alpha_star: &DVector<f64>,
    reduced: &ReducedRun,
) -> Result<OrdinateEstimate> {
    if main_sample.is_empty() {
        return Err(Error::Contract("main sample is empty".into()));
    }
    let symmetric = prior.is_label_symmetric();
    let mirror = -alpha_star;
    let mut terms = Vec::with_capacity(main_sample.len());
    for d in &main_sample.draws {
        let prop = build_tailored_proposal(&d.beta, &d.sigma2, &d.cutpoints, data, prior, config)?;
        let kernel = AlphaKernel::new(&d.beta, &d.sigma2, &d.cutpoints, data, prior);
        let direct = ln_mh_prob(&kernel, &prop, &d.alpha, alpha_star) + prop.log_density(alpha_star);
        let term = if symmetric {
            let flipped = ln_mh_prob(&kernel, &prop, &d.alpha, &mirror) + prop.log_density(&mirror);
            ln_add_exp(direct, flipped) - std::f64::consts::LN_2
        } else {
            direct
        };
        terms.push(term);
    }
    let num = log_mean_with_se(&terms)?;
    let den = log_mean_with_se(&reduced.ln_accept).map_err(|e| match e {
        Error::Numerical(_) => Error::Numerical("alpha ordinate denominator is zero: no proposal from alpha* would be accepted".into()),
        other => other,
    })?;
    Ok(OrdinateEstimate { log_value: num.log_value - den.log_value, mc_se: num.mc_se.hypot(den.mc_se) })
}

/// `ln π(α*|y)`, running its own reduced run.
pub fn alpha_ordinate(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    main_sample: &PosteriorSample,
    alpha_star: &DVector<f64>,
) -> Result<OrdinateEstimate> {
    let reduced = alpha_fixed_run(data, prior, config, &ChibOptions::default(), alpha_star, None)?;
    alpha_ordinate_from(data, prior, config, main_sample, alpha_star, &reduced)
}

/// `ln π(β*|α*, y)` from a reduced run that recorded the Rao–Blackwell terms.
pub fn beta_ordinate_from(reduced: &ReducedRun) -> Result<OrdinateEstimate> {
    let terms = reduced.ln_beta_terms.as_ref().ok_or_else(|| Error::Contract("reduced run did not record beta terms".into()))?;
    log_mean_with_se(terms)
}

/// `ln π(β*|α*, y)`, running its own reduced run.
pub fn beta_ordinate(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    alpha_star: &DVector<f64>,
    beta_star: &[DVector<f64>; 2],
) -> Result<OrdinateEstimate> {
    let reduced = alpha_fixed_run(data, prior, config, &ChibOptions::default(), alpha_star, Some(beta_star))?;
    beta_ordinate_from(&reduced)
}

/// `ln π(σ²*|α*, β*, y)` from a second reduced run holding `α*` and `β*`.
pub fn sigma2_ordinate_with(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    options: &ChibOptions,
    alpha_star: &DVector<f64>,
    beta_star: &[DVector<f64>; 2],
    sigma2_star: &[f64; 2],
) -> Result<OrdinateEstimate> {
    check_supported(data)?;
    config.validate()?;
    prior.validate(data)?;
    let (len, burn) = reduced_len(config, options);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut state = initial_state(data, prior, &mut rng);
    state.params.alpha = alpha_star.clone();
    state.params.beta = beta_star.clone();
    let mut sweeper = Sweeper::new(data, prior, config, SamplerKind::Collapsed);
    sweeper.fix_alpha = true;
    sweeper.fix_beta = true;
    let mut terms = Vec::with_capacity(len);
    for iter in 0..burn + len {
        sweeper.sweep(&mut state, &mut rng)?;
        if iter < burn {
            continue;
        }
        let mut t = 0.0;
        for (s, class) in [(0usize, 1u8), (1, 2)] {
            let (shape, scale) = sigma2_full_conditional(class, &state.z, &state.u, &beta_star[s], prior, data)?;
            t += ln_inv_gamma_pdf(sigma2_star[s], shape, scale);
        }
        terms.push(t);
    }
    log_mean_with_se(&terms)
}

/// `ln π(σ²*|α*, β*, y)` with the default reduced-run length.
pub fn sigma2_ordinate(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    alpha_star: &DVector<f64>,
    beta_star: &[DVector<f64>; 2],
    sigma2_star: &[f64; 2],
) -> Result<OrdinateEstimate> {
    sigma2_ordinate_with(data, prior, config, &ChibOptions::default(), alpha_star, beta_star, sigma2_star)
}

/// Posterior mean of the draws.
pub fn posterior_mean(sample: &PosteriorSample) -> Result<ParamDraw> {
    let first = sample.draws.first().ok_or_else(|| Error::Contract("posterior sample is empty".into()))?;
    let rows = sample.matrix();
    let k = rows[0].len();
    let mean: Vec<f64> = (0..k).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64).collect();
    ParamDraw::unflatten(&mean, first.alpha.len(), first.beta[0].len(), first.cutpoints[0].n_categories())
}

/// Log marginal likelihood with the default reduced-run lengths.
pub fn chib_marginal_likelihood(data: &Dataset, prior: &PriorSpec, config: &RunConfig, main_sample: &PosteriorSample) -> Result<MarginalLikelihoodResult> {
    chib_marginal_likelihood_with(data, prior, config, &ChibOptions::default(), main_sample)
}

/// Log marginal likelihood, evaluated at `θ*` = posterior mean of the
/// relabeled main sample.
pub fn chib_marginal_likelihood_with(
    data: &Dataset,
    prior: &PriorSpec,
    config: &RunConfig,
    options: &ChibOptions,
    main_sample: &PosteriorSample,
) -> Result<MarginalLikelihoodResult> {
    check_supported(data)?;
    if !main_sample.relabeled {
        return Err(Error::Contract("the main sample must be relabeled before computing the marginal likelihood".into()));
    }
    let theta = posterior_mean(main_sample)?;
    let ll = log_likelihood(data, &theta)?;
    let lp = prior.ln_density(&theta);
    let reduced = alpha_fixed_run(data, prior, config, options, &theta.alpha, Some(&theta.beta))?;
    let ord_alpha = alpha_ordinate_from(data, prior, config, main_sample, &theta.alpha, &reduced)?;
    let ord_beta = beta_ordinate_from(&reduced)?;
    let ord_sigma2 = sigma2_ordinate_with(data, prior, config, options, &theta.alpha, &theta.beta, &theta.sigma2)?;
    let log_ml = ll + lp - (ord_alpha.log_value + ord_beta.log_value + ord_sigma2.log_value);
    let mc_se = (ord_alpha.mc_se.powi(2) + ord_beta.mc_se.powi(2) + ord_sigma2.mc_se.powi(2)).sqrt();
    Ok(MarginalLikelihoodResult {
        log_ml,
        log_likelihood: ll,
        log_prior: lp,
        log_ordinate_alpha: ord_alpha,
        log_ordinate_beta: ord_beta,
        log_ordinate_sigma2: ord_sigma2,
        theta_star: theta.flatten(),
        mc_se,
    })
}

/// Seed of the `index`-th model fitted under a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(1000 + index);
    rng.random()
}
