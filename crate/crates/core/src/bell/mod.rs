//! CHSH correlation functions on the Bloch sphere, the closed-form extremum
//! for the `A, B, C, D` state family, a multi-start numerical maximizer, and
//! Bell-parameter estimation from coincidence counts.

mod counts;
mod optimize;

pub use counts::{chsh_from_counts, AngleKey, AnglePlan, ChshEstimate, CountsTable};
pub use optimize::{chsh_optimize, chsh_optimize_with, horodecki_max, ChshOptimum, OptimizeOptions};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::linalg::{c, kron, r, Mat2};
use crate::qstate::DensityMatrix;

/// Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

/// Analyzer direction on the Bloch sphere. A linear polarizer at angle `θ`
/// sits at `Θ = 2θ`, `Φ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSetting {
    #[serde(rename = "Theta")]
    theta: f64,
    #[serde(rename = "Phi")]
    phi: f64,
}

fn wrap_pi(x: f64) -> f64 {
    // into (-π, π]
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

impl BlochSetting {
    /// Normalizes to `Θ ∈ [0, π]`, `Φ ∈ (-π, π]`, preserving the direction.
    pub fn new(theta: f64, phi: f64) -> Self {
        let mut t = wrap_pi(theta);
        let mut p = phi;
        if t < 0.0 {
            t = -t;
            p += PI;
        }
        let p = if t == 0.0 || t == PI { 0.0 } else { wrap_pi(p) };
        Self { theta: t, phi: p }
    }

    /// Linear polarizer at `θ` radians.
    pub fn linear(polarizer_angle: f64) -> Self {
        Self::new(2.0 * polarizer_angle, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Polarization angle `θ = Θ/2`.
    pub fn polarization_angle(&self) -> f64 {
        self.theta / 2.0
    }

    pub fn unit_vector(&self) -> nalgebra::Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        nalgebra::Vector3::new(st * cp, st * sp, ct)
    }

    pub fn from_unit_vector(v: &nalgebra::Vector3<f64>) -> Self {
        let n = v.norm();
        let z = (v.z / n).clamp(-1.0, 1.0);
        Self::new(z.acos(), v.y.atan2(v.x))
    }
}

/// `[[cos Θ, e^{-iΦ} sin Θ], [e^{iΦ} sin Θ, -cos Θ]]`.
pub fn observable(setting: &BlochSetting) -> Mat2 {
    observable_raw(setting.theta, setting.phi)
}

pub(crate) fn observable_raw(theta: f64, phi: f64) -> Mat2 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Mat2::new(r(ct), c(cp * st, -sp * st), c(cp * st, sp * st), r(-ct))
}

/// `Tr(ρ O₁⊗O₂)`.
pub fn correlation(rho: &DensityMatrix, s1: &BlochSetting, s2: &BlochSetting) -> f64 {
    rho.expectation(&kron(&observable(s1), &observable(s2)))
}

/// Settings for sites 1 and 2, unprimed and primed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a1: BlochSetting,
    pub a1p: BlochSetting,
    pub a2: BlochSetting,
    pub a2p: BlochSetting,
}

impl ChshSettings {
    /// Eight raw angles `[Θ₁, Φ₁, Θ₁′, Φ₁′, Θ₂, Φ₂, Θ₂′, Φ₂′]`.
    pub fn from_angles(x: &[f64; 8]) -> Self {
        Self {
            a1: BlochSetting::new(x[0], x[1]),
            a1p: BlochSetting::new(x[2], x[3]),
            a2: BlochSetting::new(x[4], x[5]),
            a2p: BlochSetting::new(x[6], x[7]),
        }
    }

    pub fn to_angles(&self) -> [f64; 8] {
        [
            self.a1.theta,
            self.a1.phi,
            self.a1p.theta,
            self.a1p.phi,
            self.a2.theta,
            self.a2.phi,
            self.a2p.theta,
            self.a2p.phi,
        ]
    }

    /// Linear polarizers, angles in radians.
    pub fn linear(t1: f64, t1p: f64, t2: f64, t2p: f64) -> Self {
        Self {
            a1: BlochSetting::linear(t1),
            a1p: BlochSetting::linear(t1p),
            a2: BlochSetting::linear(t2),
            a2p: BlochSetting::linear(t2p),
        }
    }
}

/// `S = P(a1,a2) - P(a1,a2′) + P(a1′,a2) + P(a1′,a2′)`.
pub fn chsh(rho: &DensityMatrix, s: &ChshSettings) -> f64 {
    let v = correlation(rho, &s.a1, &s.a2) - correlation(rho, &s.a1, &s.a2p)
        + correlation(rho, &s.a1p, &s.a2)
        + correlation(rho, &s.a1p, &s.a2p);
    assert!(
        v.abs() <= TSIRELSON + 1e-9,
        "CHSH value {v} exceeds the Tsirelson bound"
    );
    v
}

/// Closed-form extremum over the family with coupling `C = -p/2` and equal
/// middle diagonal `B`: the settings `Θ₁ = Θ₂′ = -π/2`, `Θ₁′ = Θ₂ = π/2`,
/// `Φ₁ = -Φ₁′ = π/4`, `Φ₂ = π/2`, `Φ₂′ = 0` give `|S| = 2√2 p` whatever the
/// diagonal.
pub fn chsh_optimal_family(p: f64, b: f64) -> Result<ChshOptimum> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    // PSD needs B ≥ |C| = p/2, unit trace with A, D ≥ 0 needs B ≤ 1/2.
    check_range("B", b, p / 2.0 - 1e-12, 0.5, "[p/2, 1/2]")?;
    let settings = ChshSettings {
        a1: BlochSetting::new(-FRAC_PI_2, FRAC_PI_4),
        a1p: BlochSetting::new(FRAC_PI_2, -FRAC_PI_4),
        a2: BlochSetting::new(FRAC_PI_2, FRAC_PI_2),
        a2p: BlochSetting::new(-FRAC_PI_2, 0.0),
    };
    // At these settings every cos Θ vanishes and each correlation reduces to
    // -p cos(Φ_i - Φ_j) sin Θ_i sin Θ_j; the four terms add to +2√2 p.
    Ok(ChshOptimum {
        s: TSIRELSON * p,
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_y, pauli_z, Mat4};
    use crate::qstate::{self, singlet_projector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close2(a: &Mat2, b: &Mat2) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-15)
    }

    #[test]
    fn observable_examples() {
        assert!(close2(&observable(&BlochSetting::new(0.0, 0.0)), &pauli_z()));
        assert!(close2(&observable(&BlochSetting::new(FRAC_PI_2, 0.0)), &pauli_x()));
        assert!(close2(
            &observable(&BlochSetting::new(FRAC_PI_2, FRAC_PI_2)),
            &pauli_y()
        ));
        let o = observable(&BlochSetting::new(1.1, -2.3));
        assert!(close2(&(o * o), &Mat2::identity()));
        assert!(o.trace().norm() < 1e-15);
        assert!(close2(&o, &o.adjoint()));
    }

    #[test]
    fn normalization_preserves_observable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = rng.random_range(-10.0..10.0);
            let p = rng.random_range(-10.0..10.0);
            let s = BlochSetting::new(t, p);
            assert!((0.0..=PI).contains(&s.theta()));
            assert!(s.phi() > -PI && s.phi() <= PI);
            assert!(close_enough(&observable(&s), &observable_raw(t, p)));
            let back = BlochSetting::from_unit_vector(&s.unit_vector());
            assert!(close_enough(&observable(&back), &observable(&s)));
        }
    }

    fn close_enough(a: &Mat2, b: &Mat2) -> bool {
        (a - b).iter().all(|z| z.norm() < 1e-12)
    }

    #[test]
    fn correlation_examples() {
        let s = singlet_projector();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = BlochSetting::new(rng.random_range(0.0..PI), rng.random_range(-PI..PI));
            assert!((correlation(&s, &a, &a) + 1.0).abs() < 1e-12);
        }
        let x = BlochSetting::new(FRAC_PI_2, 0.0);
        for p in [0.1, 0.5, 0.9] {
            let w = qstate::werner(p).unwrap();
            assert!((correlation(&w, &x, &x) + p).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_matches_family_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(p / 2.0..0.5);
            let a: f64 = rng.random_range(0.0..=(1.0 - 2.0 * b));
            let d = 1.0 - 2.0 * b - a;
            let rho = DensityMatrix::x_family(a, b, -p / 2.0, d).unwrap();
            let (t1, f1, t2, f2) = (
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            );
            let want = (1.0 - 4.0 * b) * t1.cos() * t2.cos() - p * (f1 - f2).cos() * t1.sin() * t2.sin();
            let got = correlation(&rho, &BlochSetting::new(t1, f1), &BlochSetting::new(t2, f2));
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn chsh_examples() {
        let s = ChshSettings {
            a1: BlochSetting::new(0.0, 0.0),
            a2: BlochSetting::new(FRAC_PI_4, 0.0),
            a1p: BlochSetting::new(FRAC_PI_2, 0.0),
            a2p: BlochSetting::new(3.0 * FRAC_PI_4, 0.0),
        };
        // The singlet anticorrelates, so S = -2√2 here.
        assert!((chsh(&singlet_projector(), &s).abs() - TSIRELSON).abs() < 1e-12);
        let mixed = DensityMatrix::new(Mat4::identity() * r(0.25)).unwrap();
        assert!(chsh(&mixed, &s).abs() < 1e-15);

        let opt = chsh_optimal_family(0.5, 0.375).unwrap();
        let w = qstate::werner(0.5).unwrap();
        // Direct evaluation gives +√2 at the quoted settings.
        assert!((chsh(&w, &opt.settings) - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn optimal_family_examples() {
        assert!((chsh_optimal_family(1.0, 0.5).unwrap().s - TSIRELSON).abs() < 1e-15);
        let edge = chsh_optimal_family(std::f64::consts::FRAC_1_SQRT_2, 0.4).unwrap();
        assert!((edge.s - 2.0).abs() < 1e-12);
        let low = chsh_optimal_family(0.47, 0.3675).unwrap();
        assert!((low.s - 1.3294).abs() < 1e-4);
        // independent of the diagonal
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(p / 2.0..0.5);
            let a: f64 = rng.random_range(0.0..=(1.0 - 2.0 * b));
            let rho = DensityMatrix::x_family(a, b, -p / 2.0, 1.0 - 2.0 * b - a).unwrap();
            let opt = chsh_optimal_family(p, b).unwrap();
            assert!((chsh(&rho, &opt.settings) - opt.s).abs() < 1e-12);
        }
        assert!(chsh_optimal_family(0.8, 0.3).is_err());
        assert!(chsh_optimal_family(0.5, 0.6).is_err());
    }

    #[test]
    fn linear_settings_sit_on_the_xz_great_circle() {
        let s = BlochSetting::linear(FRAC_PI_4 / 2.0);
        assert!((s.theta() - FRAC_PI_4).abs() < 1e-15);
        assert!((s.polarization_angle() - FRAC_PI_4 / 2.0).abs() < 1e-15);
        assert_eq!(s.phi(), 0.0);
    }
}
