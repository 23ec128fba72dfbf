//! MCMC samplers for the latent-class ordinal probit.
//!
//! The collapsed sampler updates `α` with the class labels integrated out,
//! through an independence Metropolis–Hastings step whose multivariate-t
//! proposal is tailored to the conditional posterior of `α`. The full Gibbs
//! sampler instead augments the class layer with a unit-variance utility and
//! draws `α` from its normal full conditional; it mixes much more slowly and
//! is kept as a baseline.

mod gibbs;
mod proposal;
mod relabel;
mod steps;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamDraw;
use crate::optim::OptimizerSettings;

pub use gibbs::{run_collapsed_gibbs, run_full_gibbs};
pub(crate) use gibbs::{initial_state, Sweeper};
pub use proposal::{build_tailored_proposal, draw_alpha_mh, tailor, AlphaKernel, BetaDeltaTarget, TailoredProposal};
pub use relabel::relabel;
pub use steps::{
    alpha_full_conditional, beta_full_conditional, draw_alpha_given_l, draw_beta, draw_beta_delta_joint, draw_class_indicators,
    draw_l, draw_latent_z, draw_sigma2, sigma2_full_conditional,
};

/// Run lengths, seed and tuning of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Degrees of freedom of the tailored multivariate-t proposals.
    pub proposal_dof: f64,
    pub optimizer: OptimizerSettings,
    /// Keep the class labels of every retained sweep.
    pub keep_u: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n_iter: 11_000, burn_in: 1_000, seed: 0, proposal_dof: 10.0, optimizer: OptimizerSettings::default(), keep_u: false }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(Error::Domain(format!("burn_in ({}) must be smaller than n_iter ({})", self.burn_in, self.n_iter)));
        }
        if !(self.proposal_dof > 2.0) || !self.proposal_dof.is_finite() {
            return Err(Error::Domain(format!("proposal_dof must be a finite number above 2, got {}", self.proposal_dof)));
        }
        if self.optimizer.max_iter == 0 || !(self.optimizer.grad_tol > 0.0) {
            return Err(Error::Domain("optimizer needs max_iter > 0 and grad_tol > 0".into()));
        }
        Ok(())
    }

    /// Number of retained draws `G`.
    pub fn retained(&self) -> usize {
        self.n_iter - self.burn_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Collapsed,
    Full,
}

/// Retained draws of one chain plus diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub draws: Vec<ParamDraw>,
    /// Class labels (`1` or `2`) per retained sweep, if requested.
    pub u_draws: Option<Vec<Vec<u8>>>,
    /// Acceptance rate of the `α` step over retained sweeps (1 for full Gibbs).
    pub accept_rate_alpha: f64,
    /// Acceptance rate of the joint `(β_s, δ_s)` steps, when `J > 3`.
    pub accept_rate_beta_delta: Option<[f64; 2]>,
    pub relabeled: bool,
    /// Fraction of draws whose labels were exchanged by [`relabel`].
    pub swap_fraction: Option<f64>,
    pub sampler: SamplerKind,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Draws of scalar parameter `k` in [`ParamDraw::flatten`] order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.flatten()[k]).collect()
    }

    /// All draws as rows in [`ParamDraw::flatten`] order.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(ParamDraw::flatten).collect()
    }
}
