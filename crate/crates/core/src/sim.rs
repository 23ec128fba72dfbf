//! Synthetic data from the latent-class ordinal probit with known truth.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cutpoints, Dataset, ParamDraw};
use crate::normal;

/// Law of one non-intercept covariate column: independent `N(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalLaw {
    pub mean: f64,
    /// Variance (not standard deviation).
    pub var: f64,
}

/// A simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: [Vec<f64>; 2],
    pub sigma2: [f64; 2],
    /// Laws of the class-layer covariates after the intercept.
    pub w_laws: Vec<NormalLaw>,
    /// Laws of the ordinal-layer covariates after the intercept.
    pub x_laws: Vec<NormalLaw>,
    #[serde(default = "three")]
    pub n_categories: usize,
    /// Cut-point coordinates per class (empty for three categories).
    #[serde(default)]
    pub delta: [Vec<f64>; 2],
    #[serde(default)]
    pub seed: u64,
}

fn three() -> usize {
    3
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let p = self.w_laws.len() + 1;
        let q = self.x_laws.len() + 1;
        if self.alpha.len() != p {
            return Err(Error::Dimension(format!("alpha has {} entries, expected {p}", self.alpha.len())));
        }
        for s in 0..2 {
            if self.beta[s].len() != q {
                return Err(Error::Dimension(format!("beta_{} has {} entries, expected {q}", s + 1, self.beta[s].len())));
            }
            if self.delta[s].len() != self.n_categories.saturating_sub(3) {
                return Err(Error::Dimension(format!("delta_{} needs {} entries", s + 1, self.n_categories.saturating_sub(3))));
            }
            if !(self.sigma2[s] > 0.0) || !self.sigma2[s].is_finite() {
                return Err(Error::Domain(format!("sigma2_{} must be positive, got {}", s + 1, self.sigma2[s])));
            }
        }
        if self.n_categories < 3 {
            return Err(Error::Domain(format!("need at least 3 categories, got {}", self.n_categories)));
        }
        if self.n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if self.w_laws.iter().chain(&self.x_laws).any(|l| !(l.var >= 0.0) || !l.mean.is_finite()) {
            return Err(Error::Domain("covariate laws need finite means and nonnegative variances".into()));
        }
        Ok(())
    }

    /// True parameters in the model's representation.
    pub fn truth(&self) -> ParamDraw {
        ParamDraw {
            alpha: DVector::from_column_slice(&self.alpha),
            beta: [DVector::from_column_slice(&self.beta[0]), DVector::from_column_slice(&self.beta[1])],
            sigma2: self.sigma2,
            cutpoints: [Cutpoints::from_delta(self.delta[0].clone()), Cutpoints::from_delta(self.delta[1].clone())],
        }
    }
}

/// Simulated data plus the latent truth that produced it.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: Dataset,
    pub s_true: Vec<u8>,
    pub z_true: Vec<f64>,
    /// Realized within-class averages of `x_i'β_s` over the members of class `s`.
    pub class_cond_means: [f64; 2],
}

/// The two designs of the simulation study. Both use `n = 1200`,
/// `α = (−0.3, 1.5)`, `σ₁² = σ₂² = 0.25`, a standard-normal class covariate and
/// ordinal covariates `N(0.5, 1)`, `N(0.5, 1)`, `N(0, 0.8)`; they differ in the
/// slopes, which separate the class means in setting 1 and nearly align them
/// in setting 2.
pub fn builtin_setting(id: u32) -> Result<SimSpec> {
    let (b1, b2) = match id {
        1 => (vec![0.6, -0.7, -0.6, 0.5], vec![0.1, 0.6, 0.2, 0.8]),
        2 => (vec![0.6, -0.6, -0.6, 0.5], vec![0.1, -0.1, -0.1, 0.8]),
        other => return Err(Error::Contract(format!("unknown built-in setting {other}; choose 1 or 2"))),
    };
    Ok(SimSpec {
        n: 1200,
        alpha: vec![-0.3, 1.5],
        beta: [b1, b2],
        sigma2: [0.25, 0.25],
        w_laws: vec![NormalLaw { mean: 0.0, var: 1.0 }],
        x_laws: vec![NormalLaw { mean: 0.5, var: 1.0 }, NormalLaw { mean: 0.5, var: 1.0 }, NormalLaw { mean: 0.0, var: 0.8 }],
        n_categories: 3,
        delta: [Vec::new(), Vec::new()],
        seed: 0,
    })
}

fn draw_row<R: Rng + ?Sized>(laws: &[NormalLaw], rng: &mut R) -> Vec<f64> {
    let mut row = Vec::with_capacity(laws.len() + 1);
    row.push(1.0);
    for law in laws {
        let e: f64 = StandardNormal.sample(rng);
        row.push(law.mean + law.var.sqrt() * e);
    }
    row
}

/// Draw a dataset: covariates from their laws, `s_i = 2` with probability
/// `Φ(w_i'α)`, `z_i ~ N(x_i'β_{s_i}, σ²_{s_i})`, and `y_i` from the band of `z_i`.
pub fn generate(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let theta = spec.truth();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (p, q, n) = (spec.alpha.len(), spec.beta[0].len(), spec.n);
    let mut w = DMatrix::zeros(n, p);
    let mut x = DMatrix::zeros(n, q);
    let mut y = Vec::with_capacity(n);
    let mut s_true = Vec::with_capacity(n);
    let mut z_true = Vec::with_capacity(n);
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for i in 0..n {
        let wi = DVector::from_vec(draw_row(&spec.w_laws, &mut rng));
        let xi = DVector::from_vec(draw_row(&spec.x_laws, &mut rng));
        let q2 = normal::cdf(wi.dot(&theta.alpha));
        let v: f64 = rng.random();
        let s = if v < q2 { 1 } else { 0 };
        let mean = xi.dot(&theta.beta[s]);
        let e: f64 = StandardNormal.sample(&mut rng);
        let z = mean + theta.sigma2[s].sqrt() * e;
        y.push(theta.cutpoints[s].category_of(z));
        s_true.push(s as u8 + 1);
        z_true.push(z);
        sums[s] += mean;
        counts[s] += 1;
        w.set_row(i, &wi.transpose());
        x.set_row(i, &xi.transpose());
    }
    let class_cond_means = [0, 1].map(|s| if counts[s] > 0 { sums[s] / counts[s] as f64 } else { f64::NAN });
    let dataset = Dataset::new(y, x, w, spec.n_categories)?;
    Ok(SimOutput { dataset, s_true, z_true, class_cond_means })
}
