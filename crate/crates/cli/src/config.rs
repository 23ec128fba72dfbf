//! The JSON configuration document. Every field is optional; omitted fields
//! take the defaults (`α ~ N(0, 3I)`, `β_s ~ N(0, I)`, `σ_s² ~ IG(4.3, 1.3)`,
//! 11000 sweeps with 1000 burn-in). Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use lcop_core::comparison::ChibOptions;
use lcop_core::linalg::MvNormal;
use lcop_core::model::PriorSpec;
use lcop_core::samplers::RunConfig;

use crate::error::{CliError, CliResult};
use crate::io::read_bytes;

/// Prior fields to override; the rest come from the default prior for the
/// dataset's dimensions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorOverrides {
    pub alpha: Option<MvNormal>,
    pub beta: Option<[MvNormal; 2]>,
    pub v: Option<f64>,
    pub d: Option<f64>,
    pub delta: Option<[MvNormal; 2]>,
}

/// Which dataset covariates enter each layer (all of them when omitted).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelColumns {
    pub x: Option<Vec<String>>,
    pub w: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub prior: PriorOverrides,
    pub run: RunConfig,
    pub chib: ChibOptions,
    pub model: ModelColumns,
    /// Outcome labels from the highest-utility category down.
    pub categories: Option<Vec<i64>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<(Self, Option<String>)> {
        match path {
            None => Ok((Self::default(), None)),
            Some(p) => {
                let bytes = read_bytes(p)?;
                let config: Config = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::Validation(format!("{}: invalid configuration: {e}", p.display())))?;
                config.run.validate()?;
                Ok((config, Some(crate::io::sha256_hex(&bytes))))
            }
        }
    }

    /// The full prior for a model with the given dimensions.
    pub fn resolve_prior(&self, p: usize, q: usize, n_categories: usize) -> PriorSpec {
        let mut prior = PriorSpec::default_for(p, q, n_categories);
        let o = &self.prior;
        if let Some(a) = &o.alpha {
            prior.alpha = a.clone();
        }
        if let Some(b) = &o.beta {
            prior.beta = b.clone();
        }
        if let Some(v) = o.v {
            prior.v = v;
        }
        if let Some(d) = o.d {
            prior.d = d;
        }
        if let Some(dl) = &o.delta {
            prior.delta = dl.clone();
        }
        prior
    }
}

/// The configuration as actually used, echoed into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub prior: PriorSpec,
    pub run: RunConfig,
    pub chib: ChibOptions,
    pub model: ModelColumns,
    pub categories: Vec<i64>,
}
