use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{linear_reconstruct, TomoData};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, r, Ket4, Mat4};
use crate::optim::{self, BfgsOptions};
use crate::qstate::DensityMatrix;

#[derive(Debug, Clone, Copy)]
pub struct MlOptions {
    /// Start 0 is the projected linear estimate; the rest perturb it.
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the start perturbations, in factor entries.
    pub perturbation: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            starts: 4,
            seed: 0x70_6d6f,
            perturbation: 0.05,
            max_iter: 3000,
            grad_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlEstimate {
    pub rho: DensityMatrix,
    /// Poisson log-likelihood with the flux at its optimum, up to the
    /// data-only `ln n!` terms.
    pub log_likelihood: f64,
    /// Fitted counts per unit probability.
    pub flux: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Profile log-likelihood `Σ n_k ln(η p_k) − η p_k` of `rho`, with
/// `p_k = Tr(ρ Π_k)` and the flux `η = Σn / Σp` at its maximum.
pub fn log_likelihood(data: &TomoData, rho: &DensityMatrix) -> f64 {
    let p: Vec<f64> = data
        .settings()
        .iter()
        .map(|s| rho.expectation(&s.projector()).max(0.0))
        .collect();
    let n_tot: f64 = data.counts().iter().sum();
    let p_tot: f64 = p.iter().sum();
    let eta = n_tot / p_tot;
    data.counts()
        .iter()
        .zip(&p)
        .map(|(&n, &pk)| {
            let mean = eta * pk;
            if n > 0.0 {
                n * mean.ln() - mean
            } else {
                -mean
            }
        })
        .sum()
}

pub fn ml_reconstruct(data: &TomoData) -> Result<MlEstimate> {
    ml_reconstruct_with(data, &MlOptions::default())
}

/// Maximum-likelihood state with `ρ = L L† / Tr(L L†)`, `L` lower triangular
/// with real diagonal (16 real parameters). The flux is profiled out of the
/// Poisson likelihood analytically; a quadratic penalty on `Tr(L L†) − 1`
/// removes the remaining scale freedom of `L`.
pub fn ml_reconstruct_with(data: &TomoData, opts: &MlOptions) -> Result<MlEstimate> {
    let n_tot: f64 = data.counts().iter().sum();
    if !(n_tot > 0.0) {
        return Err(Error::Domain("tomography data contain no counts".into()));
    }
    let kets: Vec<Ket4> = data.settings().iter().map(|s| s.ket()).collect();
    let counts = data.counts();

    // Sparse tables can make the linear normalization non-positive.
    let start = linear_reconstruct(data)
        .map(|e| e.psd_projection())
        .unwrap_or_else(|_| DensityMatrix::maximally_mixed());
    let eps = 1e-3;
    let seed_m = start.matrix() * r(1.0 - eps) + Mat4::identity() * r(eps / 4.0);
    let chol = Cholesky::new(hermitian_part(&seed_m))
        .ok_or_else(|| Error::Domain("start state is not positive definite".into()))?;
    let x0 = pack(&chol.l());

    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
    };
    let mut best: Option<optim::BfgsResult> = None;
    let mut total_iter = 0;
    for k in 0..opts.starts.max(1) {
        let mut x = x0.clone();
        if k > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            for v in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += opts.perturbation * z;
            }
        }
        let res = optim::minimize(|x, g| objective(x, g, &kets, counts, n_tot), &x, &bfgs);
        total_iter += res.iterations;
        let ok = res.converged || res.grad_norm <= 1e3 * opts.grad_tol;
        if ok && best.as_ref().is_none_or(|b| res.f < b.f) {
            best = Some(res);
        }
    }
    let Some(best) = best else {
        return Err(Error::Convergence(format!(
            "maximum-likelihood fit failed from all {} starts",
            opts.starts.max(1)
        )));
    };
    let l = unpack(&best.x);
    let ll = l * l.adjoint();
    let t = ll.trace().re;
    let rho = DensityMatrix::new(hermitian_part(&(ll * r(1.0 / t))))?;
    let p_tot: f64 = kets.iter().map(|k| (k.adjoint() * rho.matrix() * k)[(0, 0)].re).sum();
    Ok(MlEstimate {
        log_likelihood: log_likelihood(data, &rho),
        flux: n_tot / p_tot,
        rho,
        iterations: total_iter,
        grad_norm: best.grad_norm,
    })
}

const OFF_DIAG: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

fn pack(l: &Mat4) -> Vec<f64> {
    let mut x: Vec<f64> = (0..4).map(|i| l[(i, i)].re).collect();
    for (i, j) in OFF_DIAG {
        x.push(l[(i, j)].re);
        x.push(l[(i, j)].im);
    }
    x
}

fn unpack(x: &[f64]) -> Mat4 {
    let mut l = Mat4::zeros();
    for i in 0..4 {
        l[(i, i)] = r(x[i]);
    }
    for (k, (i, j)) in OFF_DIAG.iter().enumerate() {
        l[(*i, *j)] = c(x[4 + 2 * k], x[5 + 2 * k]);
    }
    l
}

/// Negative profile log-likelihood plus scale penalty, per count.
fn objective(x: &[f64], grad: &mut [f64], kets: &[Ket4], counts: &[f64], n_tot: f64) -> f64 {
    let l = unpack(x);
    let ladj = l.adjoint();
    let q: Vec<f64> = kets.iter().map(|k| (ladj * k).norm_squared()).collect();
    let q_tot: f64 = q.iter().sum();
    let mut f = -n_tot * q_tot.ln();
    for (&n, &qk) in counts.iter().zip(&q) {
        if n > 0.0 {
            if qk <= 0.0 {
                return f64::INFINITY;
            }
            f += n * qk.ln();
        }
    }
    let t: f64 = l.iter().map(|z| z.norm_sqr()).sum();
    let penalty = n_tot * (t - 1.0).powi(2);

    let mut g_mat = Mat4::zeros();
    for ((k, &n), &qk) in kets.iter().zip(counts).zip(&q) {
        let w = if n > 0.0 { n / qk } else { 0.0 } - n_tot / q_tot;
        g_mat += k * k.adjoint() * r(w);
    }
    let gl = g_mat * l;
    let dp = 4.0 * n_tot * (t - 1.0);
    for i in 0..4 {
        grad[i] = (-2.0 * gl[(i, i)].re + dp * l[(i, i)].re) / n_tot;
    }
    for (k, (i, j)) in OFF_DIAG.iter().enumerate() {
        grad[4 + 2 * k] = (-2.0 * gl[(*i, *j)].re + dp * l[(*i, *j)].re) / n_tot;
        grad[5 + 2 * k] = (-2.0 * gl[(*i, *j)].im + dp * l[(*i, *j)].im) / n_tot;
    }
    (-f + penalty) / n_tot
}
