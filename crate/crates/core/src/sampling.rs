//! Seeded random two-qubit states for property tests and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, hermitian_part, r, Ket4, Mat4};
use crate::qstate::{DensityMatrix, PureState};

fn gaussian_c<R: Rng>(rng: &mut R) -> crate::linalg::C64 {
    c(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng>(rng: &mut R) -> PureState {
    let v = Ket4::from_fn(|_, _| gaussian_c(rng));
    PureState::normalized(v).expect("a Gaussian vector is nonzero")
}

/// `G G† / Tr(G G†)` for a 4×k complex Gaussian `G`, with the rank `k`
/// drawn uniformly from 1..=4, then mixed with `I/4` at a uniform weight in
/// `[0, 1)` half of the time. Covers pure, low-rank, separable and entangled
/// states.
pub fn random_density_matrix<R: Rng>(rng: &mut R) -> DensityMatrix {
    let k = rng.random_range(1..=4usize);
    let mut m = Mat4::zeros();
    for _ in 0..k {
        let v = Ket4::from_fn(|_, _| gaussian_c(rng));
        m += v * v.adjoint();
    }
    let t = m.trace().re;
    m *= r(1.0 / t);
    if rng.random_bool(0.5) {
        let w: f64 = rng.random_range(0.0..1.0);
        m = m * r(1.0 - w) + Mat4::identity() * r(w / 4.0);
    }
    DensityMatrix::new(hermitian_part(&m)).expect("Gram matrix is a valid state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = random_density_matrix(&mut a);
            assert_eq!(x, random_density_matrix(&mut b));
        }
        let p = random_pure_state(&mut a);
        assert!((p.amplitudes().norm() - 1.0).abs() < 1e-12);
    }
}
