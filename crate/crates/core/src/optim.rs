//! Dense BFGS minimizer with backtracking line search. Used by the CHSH
//! angle search and the maximum-likelihood tomography fit, both of which have
//! at most a few dozen parameters and cheap analytic gradients.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Converged once `‖∇f‖∞ ≤ grad_tol`.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f`, which returns the value and writes the gradient into its
/// second argument. Non-finite values are treated as `+∞` by the line search.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut fx = f(x.as_slice(), g.as_mut_slice());
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut x_new = DVector::zeros(n);
    let mut g_new = DVector::zeros(n);

    for it in 0..opts.max_iter {
        let gnorm = g.amax();
        if gnorm <= opts.grad_tol {
            return finish(x, fx, gnorm, it, true);
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h.fill_with_identity();
            d = -g.clone();
            slope = g.dot(&d);
        }

        // Armijo backtracking.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            x_new.copy_from(&x);
            x_new.axpy(t, &d, 1.0);
            let f_new = f(x_new.as_slice(), g_new.as_mut_slice());
            let armijo = f_new <= fx + 1e-4 * t * slope;
            // Near a minimum, value differences drown in rounding; fall back
            // on the approximate Wolfe test, which only trusts the gradient.
            let dphi = g_new.dot(&d);
            let approx_wolfe =
                f_new <= fx + 1e-12 * fx.abs().max(1e-300) && dphi >= 0.9 * slope && dphi <= -0.8 * slope;
            if f_new.is_finite() && (armijo || approx_wolfe) {
                accepted = true;
                let s = &x_new - &x;
                let y = &g_new - &g;
                let sy = s.dot(&y);
                if sy > 1e-14 * s.norm() * y.norm() && sy > 0.0 {
                    if first {
                        h *= sy / y.dot(&y);
                        first = false;
                    }
                    let rho = 1.0 / sy;
                    let hy = &h * &y;
                    let yhy = y.dot(&hy);
                    // H ← H - ρ(s hyᵀ + hy sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
                    h.ger(-rho, &s, &hy, 1.0);
                    h.ger(-rho, &hy, &s, 1.0);
                    h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
                }
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent possible at working precision.
            let gnorm = g.amax();
            return finish(x, fx, gnorm, it, false);
        }
    }
    let gnorm = g.amax();
    let ok = gnorm <= opts.grad_tol;
    finish(x, fx, gnorm, opts.max_iter, ok)
}

fn finish(x: DVector<f64>, f: f64, grad_norm: f64, iterations: usize, converged: bool) -> BfgsResult {
    BfgsResult {
        x: x.as_slice().to_vec(),
        f,
        grad_norm,
        iterations,
        converged,
    }
}
