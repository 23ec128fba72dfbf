//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::LN_SQRT_2PI;

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    let sym = symmetrize(m);
    Cholesky::new(sym).ok_or_else(|| Error::Domain(format!("{what} is not positive definite")))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Inverse of an SPD matrix.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky(m, what)?.inverse())
}

/// Replace eigenvalues below `floor` by `floor`. Returns the repaired matrix
/// and whether any eigenvalue had to be raised.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut repaired = false;
    let vals = eig.eigenvalues.map(|v| {
        if v < floor || !v.is_finite() {
            repaired = true;
            floor
        } else {
            v
        }
    });
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    (symmetrize(&out), repaired)
}

/// Multivariate normal with cached precision and factorization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MvNormalRepr", into = "MvNormalRepr")]
pub struct MvNormal {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    log_det: f64,
}

#[derive(Serialize, Deserialize)]
struct MvNormalRepr {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl TryFrom<MvNormalRepr> for MvNormal {
    type Error = Error;

    fn try_from(r: MvNormalRepr) -> Result<Self> {
        let k = r.mean.len();
        if r.cov.len() != k || r.cov.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension(format!("covariance must be {k}x{k}")));
        }
        let cov = DMatrix::from_fn(k, k, |i, j| r.cov[i][j]);
        MvNormal::new(DVector::from_vec(r.mean), cov)
    }
}

impl From<MvNormal> for MvNormalRepr {
    fn from(m: MvNormal) -> Self {
        let k = m.dim();
        MvNormalRepr {
            mean: m.mean.iter().copied().collect(),
            cov: (0..k).map(|i| (0..k).map(|j| m.cov[(i, j)]).collect()).collect(),
        }
    }
}

impl MvNormal {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::Dimension(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = cholesky(&cov, "covariance")?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let precision = chol.inverse();
        Ok(Self { mean, cov: symmetrize(&cov), precision, chol_lower, log_det })
    }

    /// `N(0, scale · I)` in `dim` dimensions.
    pub fn isotropic(dim: usize, scale: f64) -> Result<Self> {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * scale)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let r = x - &self.mean;
        let quad = r.dot(&(&self.precision * &r));
        -(self.dim() as f64) * LN_SQRT_2PI - 0.5 * self.log_det - 0.5 * quad
    }

    /// Gradient of `ln_pdf` at `x`.
    pub fn grad_ln_pdf(&self, x: &DVector<f64>) -> DVector<f64> {
        -(&self.precision * (x - &self.mean))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        sample_mvn(&self.mean, &self.chol_lower, rng)
    }
}

/// Draw `mean + L e` with `e` standard normal.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &DVector<f64>, chol_lower: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let e = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + chol_lower * e
}

/// Whether the columns of `m` are linearly independent (numerically).
pub fn has_full_column_rank(m: &DMatrix<f64>) -> bool {
    if m.nrows() < m.ncols() {
        return false;
    }
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > max * 1e-12
}
