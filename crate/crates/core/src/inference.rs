//! Posterior summaries, autocorrelation diagnostics, average class-conditional
//! category probabilities and covariate effects.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{class_cond_probs_at, param_names, Dataset, ParamDraw};
use crate::samplers::PosteriorSample;

/// Lags reported by [`summarize`].
pub const SUMMARY_MAX_LAG: usize = 40;
/// Smallest sample [`summarize`] accepts.
pub const SUMMARY_MIN_DRAWS: usize = 100;
/// Probability mass of the one- and two-standard-deviation intervals.
pub const LEVEL_1SD: f64 = 0.682_689_492_137_085_9;
pub const LEVEL_2SD: f64 = 0.954_499_736_103_641_6;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn centred(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = mean(series);
    let c: Vec<f64> = series.iter().map(|x| x - m).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64;
    if !(c0 > 0.0) {
        return Err(Error::Domain("series has zero variance".into()));
    }
    Ok((c, c0))
}

fn acf_at(c: &[f64], c0: f64, k: usize) -> f64 {
    let g = c.len();
    c[..g - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / (g as f64 * c0)
}

/// Sample autocorrelations at lags `0..=max_lag` (biased normalization, so
/// entry 0 is exactly 1).
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::Contract(format!("series of length {} is too short for lag {max_lag}", series.len())));
    }
    let (c, c0) = centred(series)?;
    Ok((0..=max_lag).map(|k| if k == 0 { 1.0 } else { acf_at(&c, c0, k) }).collect())
}

/// `G / τ` where `τ = 1 + 2Σ_k ρ_k` is truncated by Geyer's initial positive
/// sequence; the result is clipped to `(0, G]`.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let g = series.len();
    if g < 4 {
        return Err(Error::Contract(format!("need at least 4 draws, got {g}")));
    }
    let (c, c0) = centred(series)?;
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < g {
        let r0 = if m == 0 { 1.0 } else { acf_at(&c, c0, 2 * m) };
        let pair = r0 + acf_at(&c, c0, 2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        m += 1;
    }
    let ess = g as f64 / tau.max(f64::MIN_POSITIVE);
    Ok(ess.clamp(f64::MIN_POSITIVE, g as f64))
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed interval with the given coverage.
pub fn interval_sorted(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(sorted, tail), quantile_sorted(sorted, 1.0 - tail))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_68: (f64, f64),
    pub ci_95: (f64, f64),
    /// `None` when the parameter is constant across draws.
    pub ess: Option<f64>,
    /// Autocorrelations at lags `1..=40` (empty for a constant parameter).
    pub acf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub n_draws: usize,
    /// How the intervals were formed.
    pub interval_method: String,
    pub params: Vec<ParamSummary>,
}

impl SummaryTable {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Summary of one named series of draws.
pub fn summarize_series(name: &str, values: &[f64]) -> ParamSummary {
    let g = values.len();
    let m = mean(values);
    let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (g as f64 - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (ess, acf) = match (effective_sample_size(values), autocorrelation(values, SUMMARY_MAX_LAG.min(g - 1))) {
        (Ok(e), Ok(a)) => (Some(e), a[1..].to_vec()),
        _ => (None, Vec::new()),
    };
    ParamSummary { name: name.to_string(), mean: m, sd, ci_68: interval_sorted(&sorted, LEVEL_1SD), ci_95: interval_sorted(&sorted, LEVEL_2SD), ess, acf }
}

/// Per-parameter posterior summaries of a sample with at least 100 draws.
pub fn summarize(sample: &PosteriorSample) -> Result<SummaryTable> {
    let g = sample.len();
    if g < SUMMARY_MIN_DRAWS {
        return Err(Error::Contract(format!("summaries need at least {SUMMARY_MIN_DRAWS} draws, got {g}")));
    }
    let first = &sample.draws[0];
    let names = param_names(first.alpha.len(), first.beta[0].len(), first.cutpoints[0].n_categories());
    let rows = sample.matrix();
    let params = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            summarize_series(name, &col)
        })
        .collect();
    Ok(SummaryTable { n_draws: g, interval_method: "equal-tailed posterior quantiles (type 7)".into(), params })
}

fn check_sample(sample: &PosteriorSample, data: &Dataset) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::Contract("posterior sample is empty".into()));
    }
    let d = &sample.draws[0];
    if d.beta[0].len() != data.q() || d.alpha.len() != data.p() || d.cutpoints[0].n_categories() != data.n_categories() {
        return Err(Error::Dimension(format!(
            "draws have p={}, q={}, J={} but the data have p={}, q={}, J={}",
            d.alpha.len(),
            d.beta[0].len(),
            d.cutpoints[0].n_categories(),
            data.p(),
            data.q(),
            data.n_categories()
        )));
    }
    Ok(())
}

/// Per-draw average of the class-conditional category probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgProbDistribution {
    /// `values[s][j][g]`: class `s+1`, category `j+1`, draw `g`.
    pub values: [Vec<Vec<f64>>; 2],
    /// Posterior mean of each `values[s][j]`.
    pub mean: [Vec<f64>; 2],
}

fn class_avg_probs(x_beta: &DVector<f64>, sigma: f64, draw: &ParamDraw, s: usize) -> Vec<f64> {
    let j = draw.cutpoints[s].n_categories();
    let mut acc = vec![0.0; j];
    for &mu in x_beta.iter() {
        for (a, p) in acc.iter_mut().zip(class_cond_probs_at(mu, sigma, &draw.cutpoints[s])) {
            *a += p;
        }
    }
    let n = x_beta.len() as f64;
    acc.iter().map(|a| a / n).collect()
}

/// `Avg.Prob⁽ᵍ⁾(Y = j | s) = n⁻¹ Σ_i P⁽ᵍ⁾_{ij|s}` for every draw.
pub fn average_category_probs(sample: &PosteriorSample, data: &Dataset) -> Result<AvgProbDistribution> {
    check_sample(sample, data)?;
    let j = data.n_categories();
    let g = sample.len();
    let mut values = [vec![Vec::with_capacity(g); j], vec![Vec::with_capacity(g); j]];
    for draw in &sample.draws {
        for s in 0..2 {
            let mu = data.x() * &draw.beta[s];
            let avg = class_avg_probs(&mu, draw.sigma2[s].sqrt(), draw, s);
            for (k, v) in avg.into_iter().enumerate() {
                values[s][k].push(v);
            }
        }
    }
    let mean = [0, 1].map(|s| values[s].iter().map(|v| self::mean(v)).collect());
    Ok(AvgProbDistribution { values, mean })
}

/// How the covariate is moved from its baseline `x‡` to `x†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Perturbation {
    /// `+1` sample standard deviation of the column, or `0 → 1` if the column
    /// only takes the values 0 and 1.
    Default,
    /// `x† = x‡ + amount` with `x‡` the observed value.
    Shift { amount: f64 },
    /// Every observation is set to `from` for `x‡` and to `to` for `x†`.
    Set { from: f64, to: f64 },
}

/// Class-conditional effect of moving one ordinal-layer covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateEffect {
    /// Zero-based column of `X` (column 0 is the intercept).
    pub covariate: usize,
    /// The perturbation that was actually applied (the default is resolved).
    pub applied: Perturbation,
    /// `per_draw[s][j][g]`: observation-averaged effect for class `s+1`,
    /// category `j+1`, draw `g`.
    pub per_draw: [Vec<Vec<f64>>; 2],
    /// Average over observations and draws.
    pub mean: [Vec<f64>; 2],
    pub sd: [Vec<f64>; 2],
    /// Equal-tailed 95.45% interval of the per-draw effects.
    pub ci_95: [Vec<(f64, f64)>; 2],
}

fn resolve(column: &[f64], perturbation: Perturbation) -> Perturbation {
    match perturbation {
        Perturbation::Default => {
            if column.iter().all(|&v| v == 0.0 || v == 1.0) {
                Perturbation::Set { from: 0.0, to: 1.0 }
            } else {
                let m = mean(column);
                let sd = (column.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (column.len() as f64 - 1.0).max(1.0)).sqrt();
                Perturbation::Shift { amount: sd }
            }
        }
        other => other,
    }
}

/// Average change in `P(y = j | s)` when covariate `k` (a column of `X`,
/// not the intercept) moves from `x‡` to `x†`, averaged over observations
/// and draws.
pub fn covariate_effect(sample: &PosteriorSample, data: &Dataset, k: usize, perturbation: Perturbation) -> Result<CovariateEffect> {
    check_sample(sample, data)?;
    if k == 0 {
        return Err(Error::Contract("covariate 0 is the intercept; effects are defined for the other columns".into()));
    }
    if k >= data.q() {
        return Err(Error::Contract(format!("covariate index {k} out of range (X has {} columns)", data.q())));
    }
    let column: Vec<f64> = data.x().column(k).iter().copied().collect();
    let applied = resolve(&column, perturbation);
    let (base, moved): (Vec<f64>, Vec<f64>) = match applied {
        Perturbation::Shift { amount } => (column.clone(), column.iter().map(|v| v + amount).collect()),
        Perturbation::Set { from, to } => (vec![from; column.len()], vec![to; column.len()]),
        Perturbation::Default => unreachable!("resolved above"),
    };
    let j = data.n_categories();
    let g = sample.len();
    let mut per_draw = [vec![Vec::with_capacity(g); j], vec![Vec::with_capacity(g); j]];
    for draw in &sample.draws {
        for s in 0..2 {
            let beta = &draw.beta[s];
            let mu = data.x() * beta;
            let sigma = draw.sigma2[s].sqrt();
            let bk = beta[k];
            let mut acc = vec![0.0; j];
            for i in 0..data.n() {
                let rest = mu[i] - column[i] * bk;
                let hi = class_cond_probs_at(rest + moved[i] * bk, sigma, &draw.cutpoints[s]);
                let lo = class_cond_probs_at(rest + base[i] * bk, sigma, &draw.cutpoints[s]);
                for c in 0..j {
                    acc[c] += hi[c] - lo[c];
                }
            }
            for c in 0..j {
                per_draw[s][c].push(acc[c] / data.n() as f64);
            }
        }
    }
    let stats = |v: &Vec<f64>| {
        let m = mean(v);
        let sd = if v.len() > 1 { (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt() } else { 0.0 };
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        (m, sd, interval_sorted(&sorted, LEVEL_2SD))
    };
    let mut out_mean = [Vec::new(), Vec::new()];
    let mut out_sd = [Vec::new(), Vec::new()];
    let mut out_ci = [Vec::new(), Vec::new()];
    for s in 0..2 {
        for v in &per_draw[s] {
            let (m, sd, ci) = stats(v);
            out_mean[s].push(m);
            out_sd[s].push(sd);
            out_ci[s].push(ci);
        }
    }
    Ok(CovariateEffect { covariate: k, applied, per_draw, mean: out_mean, sd: out_sd, ci_95: out_ci })
}
