//! Quasi-Newton mode finding and finite-difference curvature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A smooth log-density (up to a constant) to be maximized.
pub trait LogTarget {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    /// Value together with its gradient.
    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>);
}

/// Stopping rules for [`maximize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_iter: usize,
    /// Euclidean norm of the gradient below which the search stops.
    pub grad_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { max_iter: 200, grad_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS with a backtracking Armijo line search.
///
/// Near the optimum the change in the objective drops below rounding noise
/// while the gradient is still informative; a step is then accepted if it
/// shrinks the gradient norm.
pub fn maximize<T: LogTarget + ?Sized>(target: &T, start: DVector<f64>, settings: &OptimizerSettings) -> Maximum {
    let n = target.dim();
    let mut x = start;
    let (mut f, mut g) = target.value_and_gradient(&x);
    // inverse Hessian of -f
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    for iter in 0..settings.max_iter {
        let gnorm = g.norm();
        if !gnorm.is_finite() || !f.is_finite() {
            return Maximum { x, value: f, gradient: g, iterations: iter, converged: false };
        }
        if gnorm <= settings.grad_tol {
            return Maximum { x, value: f, gradient: g, iterations: iter, converged: true };
        }
        let mut dir = &h * &g;
        let mut slope = g.dot(&dir);
        if !(slope > 0.0) {
            // lost positive definiteness; restart from steepest ascent
            h = DMatrix::identity(n, n);
            dir = g.clone();
            slope = g.dot(&g);
        }
        if first {
            // scale the first steepest-ascent step to unit length
            let s = 1.0 / dir.norm().max(1.0);
            dir *= s;
            slope *= s;
        }
        let noise = 1e-12 * (1.0 + f.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &dir * t;
            let (fnew, gnew) = target.value_and_gradient(&xn);
            if fnew.is_finite() {
                let armijo = fnew >= f + 1e-4 * t * slope;
                let flat = (fnew - f).abs() <= noise && gnew.norm() < gnorm;
                if armijo || flat {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            return Maximum { x, value: f, gradient: g, iterations: iter, converged: gnorm <= settings.grad_tol };
        };
        let s = &xn - &x;
        // gradient of -f changes by -(gnew - g)
        let y = &g - &gnew;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            first = false;
        }
        x = xn;
        f = fnew;
        g = gnew;
    }
    let converged = g.norm() <= settings.grad_tol;
    Maximum { x, value: f, gradient: g, iterations: settings.max_iter, converged }
}

/// Hessian by central differences of the analytic gradient, with step
/// `1e-4 · (1 + |x_k|)` per coordinate.
pub fn fd_hessian<T: LogTarget + ?Sized>(target: &T, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    for k in 0..n {
        let h = 1e-4 * (1.0 + x[k].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let gp = target.value_and_gradient(&xp).1;
        let gm = target.value_and_gradient(&xm).1;
        hess.set_column(k, &((gp - gm) / (2.0 * h)));
    }
    (&hess + hess.transpose()) * 0.5
}
