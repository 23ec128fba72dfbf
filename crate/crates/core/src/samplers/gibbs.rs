use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution};

use super::proposal::{build_tailored_proposal, draw_alpha_mh, AlphaKernel};
use super::steps::{draw_alpha_given_l, draw_beta, draw_beta_delta_joint, draw_class_indicators, draw_l, draw_latent_z, draw_sigma2};
use super::{PosteriorSample, RunConfig, SamplerKind};
use crate::error::Result;
use crate::model::{ChainState, Cutpoints, Dataset, ParamDraw, PriorSpec};

/// Neutral starting point: `α = 0`, `β_s = 0`, `σ_s²` at its prior mean,
/// `δ_s` at its prior mean, labels by fair coin flips and utilities from
/// their conditional.
pub(crate) fn initial_state(data: &Dataset, prior: &PriorSpec, rng: &mut ChaCha8Rng) -> ChainState {
    let (shape, scale) = prior.sigma2_shape_scale();
    let s2 = if shape > 1.0 { scale / (shape - 1.0) } else { scale / (shape + 1.0) };
    let cutpoints = [0, 1].map(|s| {
        if data.n_categories() > 3 {
            Cutpoints::from_delta(prior.delta[s].mean().iter().copied().collect())
        } else {
            Cutpoints::identified(3)
        }
    });
    let params = ParamDraw {
        alpha: DVector::zeros(data.p()),
        beta: [DVector::zeros(data.q()), DVector::zeros(data.q())],
        sigma2: [s2, s2],
        cutpoints,
    };
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let u: Vec<u8> = (0..data.n()).map(|_| if coin.sample(rng) { 2 } else { 1 }).collect();
    let z = draw_latent_z(&params.beta, &params.sigma2, &params.cutpoints, data, &u, rng);
    ChainState { params, z, u, l: Vec::new() }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SweepStats {
    pub alpha_accepted: bool,
    pub beta_delta_accepted: [bool; 2],
}

/// One sweep of either sampler, optionally with `α` (and `β`) held fixed as
/// needed by the reduced runs of the marginal-likelihood estimator.
pub(crate) struct Sweeper<'a> {
    pub data: &'a Dataset,
    pub prior: &'a PriorSpec,
    pub config: &'a RunConfig,
    pub kind: SamplerKind,
    pub fix_alpha: bool,
    pub fix_beta: bool,
    /// Finish each sweep with a Metropolis–Hastings proposal that exchanges
    /// the two classes' parameters and flips every label. With `α` held fixed
    /// the Gibbs updates alone rarely cross between the label modes.
    pub label_exchange: bool,
}

impl<'a> Sweeper<'a> {
    pub fn new(data: &'a Dataset, prior: &'a PriorSpec, config: &'a RunConfig, kind: SamplerKind) -> Self {
        Self { data, prior, config, kind, fix_alpha: false, fix_beta: false, label_exchange: false }
    }

    pub fn sweep(&self, state: &mut ChainState, rng: &mut ChaCha8Rng) -> Result<SweepStats> {
        let data = self.data;
        let prior = self.prior;
        let mut stats = SweepStats { alpha_accepted: true, beta_delta_accepted: [true; 2] };
        let ordinal_mh = data.n_categories() > 3;

        // (a) ordinal-layer coefficients (and cut-points when J > 3)
        if !self.fix_beta {
            for (s, class) in [(0usize, 1u8), (1, 2)] {
                let p = &mut state.params;
                if ordinal_mh {
                    let (b, d, acc) =
                        draw_beta_delta_joint(class, &p.beta[s], p.cutpoints[s].delta(), p.sigma2[s], &state.u, data, prior, self.config, rng)?;
                    p.beta[s] = b;
                    p.cutpoints[s] = Cutpoints::from_delta(d);
                    stats.beta_delta_accepted[s] = acc;
                } else {
                    p.beta[s] = draw_beta(class, &state.z, &state.u, p.sigma2[s], prior, data, rng)?;
                }
            }
            if ordinal_mh {
                // the utilities must lie in the bands of the new cut-points
                let p = &state.params;
                state.z = draw_latent_z(&p.beta, &p.sigma2, &p.cutpoints, data, &state.u, rng);
            }
        }

        // (b) variances
        for (s, class) in [(0usize, 1u8), (1, 2)] {
            let p = &mut state.params;
            p.sigma2[s] = draw_sigma2(class, &state.z, &state.u, &p.beta[s], prior, data, rng)?;
        }

        // (c) class-membership coefficients
        if !self.fix_alpha {
            let p = &mut state.params;
            match self.kind {
                SamplerKind::Collapsed => {
                    let proposal = build_tailored_proposal(&p.beta, &p.sigma2, &p.cutpoints, data, prior, self.config)?;
                    let kernel = AlphaKernel::new(&p.beta, &p.sigma2, &p.cutpoints, data, prior);
                    let (alpha, accepted) = draw_alpha_mh(&p.alpha, &proposal, &kernel, rng);
                    p.alpha = alpha;
                    stats.alpha_accepted = accepted;
                }
                SamplerKind::Full => {
                    state.l = draw_l(&p.alpha, &state.u, data, rng);
                    p.alpha = draw_alpha_given_l(&state.l, data, prior, rng)?;
                }
            }
        }

        // (d) class labels, utilities integrated out
        let p = &state.params;
        state.u = draw_class_indicators(&p.alpha, &p.beta, &p.sigma2, &p.cutpoints, data, rng)?;

        // (e) utilities
        state.z = draw_latent_z(&p.beta, &p.sigma2, &p.cutpoints, data, &state.u, rng);

        if self.label_exchange && !self.fix_beta {
            self.exchange_labels(state, rng);
        }
        Ok(stats)
    }

    /// The exchange is an involution that leaves `p(y, z | u, β, σ², γ)`
    /// unchanged, so only the prior and the membership probabilities enter
    /// the acceptance ratio.
    fn exchange_labels(&self, state: &mut ChainState, rng: &mut ChaCha8Rng) {
        let p = &state.params;
        let mut swapped = p.swapped();
        swapped.alpha = p.alpha.clone();
        let eta = self.data.w() * &p.alpha;
        let mut ln_ratio = self.prior.ln_density(&swapped) - self.prior.ln_density(p);
        for (i, &s) in state.u.iter().enumerate() {
            let (ln_q2, ln_q1) = crate::normal::ln_cdf_pair(eta[i]);
            ln_ratio += if s == 2 { ln_q1 - ln_q2 } else { ln_q2 - ln_q1 };
        }
        let v: f64 = rng.random();
        if ln_ratio >= 0.0 || v.ln() < ln_ratio {
            state.params = swapped;
            for s in state.u.iter_mut() {
                *s = 3 - *s;
            }
        }
    }
}

fn run_chain(data: &Dataset, prior: &PriorSpec, config: &RunConfig, kind: SamplerKind) -> Result<PosteriorSample> {
    config.validate()?;
    prior.validate(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_state(data, prior, &mut rng);
    let sweeper = Sweeper::new(data, prior, config, kind);
    let g = config.retained();
    let mut draws = Vec::with_capacity(g);
    let mut u_draws = config.keep_u.then(|| Vec::with_capacity(g));
    let mut alpha_acc = 0usize;
    let mut bd_acc = [0usize; 2];
    for iter in 0..config.n_iter {
        let stats = sweeper.sweep(&mut state, &mut rng)?;
        if iter >= config.burn_in {
            alpha_acc += stats.alpha_accepted as usize;
            for s in 0..2 {
                bd_acc[s] += stats.beta_delta_accepted[s] as usize;
            }
            draws.push(state.params.clone());
            if let Some(us) = u_draws.as_mut() {
                us.push(state.u.clone());
            }
        }
    }
    let gf = g as f64;
    Ok(PosteriorSample {
        draws,
        u_draws,
        accept_rate_alpha: alpha_acc as f64 / gf,
        accept_rate_beta_delta: (data.n_categories() > 3).then(|| [bd_acc[0] as f64 / gf, bd_acc[1] as f64 / gf]),
        relabeled: false,
        swap_fraction: None,
        sampler: kind,
    })
}

/// Collapsed Gibbs sampler: per sweep `β_s`, `σ_s²`, `α` by tailored
/// Metropolis–Hastings with the labels integrated out, the labels, and the
/// utilities.
pub fn run_collapsed_gibbs(data: &Dataset, prior: &PriorSpec, config: &RunConfig) -> Result<PosteriorSample> {
    run_chain(data, prior, config, SamplerKind::Collapsed)
}

/// Full Gibbs sampler: as the collapsed sampler, but `α` is drawn from its
/// normal conditional given the class-layer utilities `l`, which are drawn
/// first given the current labels.
pub fn run_full_gibbs(data: &Dataset, prior: &PriorSpec, config: &RunConfig) -> Result<PosteriorSample> {
    run_chain(data, prior, config, SamplerKind::Full)
}
