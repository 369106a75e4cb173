use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chsh, observable_raw, ChshSettings};
use crate::entanglement::correlation_tensor;
use crate::error::{Error, Result};
use crate::linalg::{c, kron, r, Mat2, Mat4};
use crate::optim::{self, BfgsOptions};
use crate::qstate::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimum {
    /// Signed CHSH value at `settings`.
    pub s: f64,
    pub settings: ChshSettings,
}

impl ChshOptimum {
    pub fn abs_s(&self) -> f64 {
        self.s.abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed_c45d,
            max_iter: 500,
            grad_tol: 1e-8,
        }
    }
}

/// Maximum CHSH value over all analyzer directions, found numerically.
pub fn chsh_optimize(rho: &DensityMatrix) -> Result<ChshOptimum> {
    chsh_optimize_with(rho, &OptimizeOptions::default())
}

/// Multi-start quasi-Newton ascent on the eight Bloch angles. Every start
/// owns a ChaCha stream derived from `opts.seed`, so the result does not
/// depend on thread scheduling.
pub fn chsh_optimize_with(rho: &DensityMatrix, opts: &OptimizeOptions) -> Result<ChshOptimum> {
    let m = *rho.matrix();
    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
    };
    let runs: Vec<_> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let x0 = random_angles(&mut rng);
            optim::minimize(
                |x, g| {
                    let s = chsh_and_gradient(&m, x, g);
                    g.iter_mut().for_each(|v| *v = -*v);
                    -s
                },
                &x0,
                &bfgs,
            )
        })
        .collect();

    let best = runs.iter().filter(|r| r.converged).min_by(|a, b| a.f.total_cmp(&b.f));
    let Some(best) = best else {
        let worst = runs.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
        return Err(Error::Convergence(format!(
            "none of {} CHSH starts reached |grad| <= {:e} (largest final |grad| {worst:.3e})",
            runs.len(),
            opts.grad_tol
        )));
    };
    let mut x = [0.0; 8];
    x.copy_from_slice(&best.x);
    let settings = ChshSettings::from_angles(&x);
    Ok(ChshOptimum {
        s: chsh(rho, &settings),
        settings,
    })
}

fn random_angles<R: Rng>(rng: &mut R) -> Vec<f64> {
    let mut x = Vec::with_capacity(8);
    for _ in 0..4 {
        let z: f64 = rng.random_range(-1.0..1.0);
        x.push(z.acos());
        x.push(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
    }
    x
}

fn d_theta(theta: f64, phi: f64) -> Mat2 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Mat2::new(r(-st), c(cp * ct, -sp * ct), c(cp * ct, sp * ct), r(st))
}

fn d_phi(theta: f64, phi: f64) -> Mat2 {
    let st = theta.sin();
    let (sp, cp) = phi.sin_cos();
    // d/dΦ e^{∓iΦ} = ∓i e^{∓iΦ}
    Mat2::new(r(0.0), c(-sp * st, -cp * st), c(-sp * st, cp * st), r(0.0))
}

fn tr(rho: &Mat4, a: &Mat2, b: &Mat2) -> f64 {
    crate::linalg::trace_product_re(rho, &kron(a, b))
}

/// CHSH value at raw angles `[Θ₁, Φ₁, Θ₁′, Φ₁′, Θ₂, Φ₂, Θ₂′, Φ₂′]` and its
/// gradient, computed from traces against `ρ`.
pub(crate) fn chsh_and_gradient(rho: &Mat4, x: &[f64], grad: &mut [f64]) -> f64 {
    let o: Vec<Mat2> = (0..4).map(|k| observable_raw(x[2 * k], x[2 * k + 1])).collect();
    let dt: Vec<Mat2> = (0..4).map(|k| d_theta(x[2 * k], x[2 * k + 1])).collect();
    let dp: Vec<Mat2> = (0..4).map(|k| d_phi(x[2 * k], x[2 * k + 1])).collect();
    // Terms (site-1 index, site-2 index, sign); indices 0=a1, 1=a1′, 2=a2, 3=a2′.
    const TERMS: [(usize, usize, f64); 4] = [(0, 2, 1.0), (0, 3, -1.0), (1, 2, 1.0), (1, 3, 1.0)];
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut s = 0.0;
    for (i, j, sign) in TERMS {
        s += sign * tr(rho, &o[i], &o[j]);
        grad[2 * i] += sign * tr(rho, &dt[i], &o[j]);
        grad[2 * i + 1] += sign * tr(rho, &dp[i], &o[j]);
        grad[2 * j] += sign * tr(rho, &o[i], &dt[j]);
        grad[2 * j + 1] += sign * tr(rho, &o[i], &dp[j]);
    }
    s
}

/// Maximal CHSH value from the correlation tensor: `2√(t₁² + t₂²)` with
/// `t₁², t₂²` the two largest eigenvalues of `TᵀT`.
pub fn horodecki_max(rho: &DensityMatrix) -> f64 {
    let t = correlation_tensor(rho);
    let mut ev: Vec<f64> = (t.transpose() * t).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    2.0 * (ev[0].max(0.0) + ev[1].max(0.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::TSIRELSON;
    use crate::qstate;

    #[test]
    fn gradient_matches_finite_differences() {
        let rho = qstate::tune_entanglement(0.8, 0.7).unwrap();
        let x = [0.3, -1.2, 2.0, 0.4, 1.1, 2.9, -0.7, 0.05];
        let mut g = [0.0; 8];
        chsh_and_gradient(rho.matrix(), &x, &mut g);
        let mut scratch = [0.0; 8];
        for k in 0..8 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (chsh_and_gradient(rho.matrix(), &xp, &mut scratch)
                - chsh_and_gradient(rho.matrix(), &xm, &mut scratch))
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8, "component {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn optimize_examples() {
        let s = chsh_optimize(&qstate::singlet_projector()).unwrap();
        assert!((s.s - TSIRELSON).abs() < 1e-9);
        let w = chsh_optimize(&qstate::werner(0.6).unwrap()).unwrap();
        assert!((w.s - TSIRELSON * 0.6).abs() < 1e-9);
        assert!((w.s - 1.6971).abs() < 1e-4);
        let m = chsh_optimize(&qstate::mems(0.8).unwrap()).unwrap();
        assert!((m.s - 2.2627).abs() < 1e-4);
        assert!((m.s - horodecki_max(&qstate::mems(0.8).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let rho = qstate::tune_entanglement(0.9, 0.8).unwrap();
        let a = chsh_optimize(&rho).unwrap();
        let b = chsh_optimize(&rho).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn horodecki_for_product_state_is_classical() {
        // |HH⟩: T = diag(0, 0, 1) → 2.
        let hh = qstate::PureState::basis(qstate::Basis::HH).density();
        assert!((horodecki_max(&hh) - 2.0).abs() < 1e-12);
    }
}
