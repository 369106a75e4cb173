use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{iris_fraction, SourceConfig};
use crate::bell::CountsTable;
use crate::error::{Error, Result};
use crate::linalg::{kron, r, Mat2};
use crate::qstate::DensityMatrix;

/// Projector onto linear polarization at `theta` radians from H.
pub fn linear_projector(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(r(c * c), r(c * s), r(c * s), r(s * s))
}

/// Coincidence rate with no analyzers: `pair_rate · QE² · T`, scaled by the
/// ring fraction the iris passes.
pub fn detected_pair_rate(config: &SourceConfig) -> Result<f64> {
    Ok(config.pair_rate * config.detector_qe.powi(2) * config.transmission * iris_fraction(config.iris_r, config)?)
}

/// Expected rates at one joint polarizer setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingRates {
    pub true_coincidences: f64,
    pub singles1: f64,
    pub singles2: f64,
    /// `singles1 · singles2 · window`.
    pub accidentals: f64,
}

impl SettingRates {
    pub fn coincidences(&self) -> f64 {
        self.true_coincidences + self.accidentals
    }
}

/// Rates for polarizers at `theta1_deg`, `theta2_deg` (degrees). The state
/// is first mixed with white noise to the configured visibility.
pub fn setting_rates(
    rho: &DensityMatrix,
    theta1_deg: f64,
    theta2_deg: f64,
    config: &SourceConfig,
) -> Result<SettingRates> {
    let rho = rho.depolarized(config.visibility)?;
    rates_for(&rho, theta1_deg, theta2_deg, config)
}

fn rates_for(rho: &DensityMatrix, theta1_deg: f64, theta2_deg: f64, config: &SourceConfig) -> Result<SettingRates> {
    let p1 = linear_projector(theta1_deg.to_radians());
    let p2 = linear_projector(theta2_deg.to_radians());
    let id = Mat2::identity();
    let pairs = config.pair_rate * iris_fraction(config.iris_r, config)?;
    // One photon of a pair reaches a given detector with probability QE·√T.
    let arm = config.detector_qe * config.transmission.sqrt();
    let singles1 = pairs * arm * rho.expectation(&kron(&p1, &id)) + config.dark_rate;
    let singles2 = pairs * arm * rho.expectation(&kron(&id, &p2)) + config.dark_rate;
    let true_coincidences = pairs * arm * arm * rho.expectation(&kron(&p1, &p2)).max(0.0);
    Ok(SettingRates {
        true_coincidences,
        singles1,
        singles2,
        accidentals: singles1 * singles2 * config.coincidence_window,
    })
}

/// Noiseless counts: the expected value at every setting.
pub fn expected_coincidences(
    rho: &DensityMatrix,
    plan: &[(f64, f64)],
    duration: f64,
    config: &SourceConfig,
) -> Result<CountsTable> {
    let rho = rho.depolarized(config.visibility)?;
    let mut table = CountsTable::new(duration);
    for &(a, b) in plan {
        table.insert(a, b, rates_for(&rho, a, b, config)?.coincidences() * duration)?;
    }
    Ok(table)
}

/// Poisson counts at each joint setting `(θ₁°, θ₂°)`, `duration` seconds per
/// setting. Setting `k` draws from its own ChaCha stream, so a setting's
/// counts do not depend on the rest of the plan.
pub fn simulate_coincidences(
    rho: &DensityMatrix,
    plan: &[(f64, f64)],
    duration: f64,
    config: &SourceConfig,
    seed: u64,
) -> Result<CountsTable> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {duration}")));
    }
    let rho = rho.depolarized(config.visibility)?;
    let mut table = CountsTable::new(duration);
    for (k, &(a, b)) in plan.iter().enumerate() {
        let mean = rates_for(&rho, a, b, config)?.coincidences() * duration;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        table.insert(a, b, poisson(mean, &mut rng))?;
    }
    Ok(table)
}

pub(crate) fn poisson<R: rand::Rng>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_from_counts, AnglePlan};
    use crate::qstate;

    #[test]
    fn projector_is_idempotent() {
        let p = linear_projector(0.3);
        assert!((p * p - p).iter().all(|z| z.norm() < 1e-15));
        assert!((linear_projector(0.0)[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_parallel_polarizers_leave_accidentals() {
        let cfg = SourceConfig::default();
        let r = setting_rates(&qstate::singlet_projector(), 30.0, 30.0, &cfg).unwrap();
        assert!(r.true_coincidences < 1e-9);
        assert!(r.accidentals > 0.0 && r.accidentals < 100.0);
    }

    #[test]
    fn full_ring_rate_exceeds_4k() {
        let cfg = SourceConfig::default();
        let rate = detected_pair_rate(&cfg).unwrap();
        assert!(rate > 4e3, "{rate}");
        // Summed over a complete polarization basis the analyzers pass every pair.
        let rho = qstate::singlet_projector();
        let total: f64 = [(0.0, 0.0), (0.0, 90.0), (90.0, 0.0), (90.0, 90.0)]
            .iter()
            .map(|&(a, b)| setting_rates(&rho, a, b, &cfg).unwrap().true_coincidences)
            .sum();
        assert!((total - rate).abs() < 1e-9 * rate);
    }

    #[test]
    fn fringe_visibility_follows_configured_factor() {
        let cfg = SourceConfig {
            visibility: 0.94,
            ..SourceConfig::default()
        };
        let rho = qstate::singlet_projector();
        let max = setting_rates(&rho, 135.0, 45.0, &cfg).unwrap().coincidences();
        let min = setting_rates(&rho, 45.0, 45.0, &cfg).unwrap().coincidences();
        let v = (max - min) / (max + min);
        assert!(v > 0.935 && v <= 0.94, "{v}");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SourceConfig::default();
        let plan = AnglePlan::standard().joint_settings();
        let rho = qstate::werner(0.9).unwrap();
        let a = simulate_coincidences(&rho, &plan, 1.0, &cfg, 7).unwrap();
        let b = simulate_coincidences(&rho, &plan, 1.0, &cfg, 7).unwrap();
        let c = simulate_coincidences(&rho, &plan, 1.0, &cfg, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_correlation_converges() {
        let cfg = SourceConfig {
            dark_rate: 0.0,
            pair_rate: 2e3,
            ..SourceConfig::default()
        };
        let rho = qstate::werner(0.8).unwrap();
        let plan = AnglePlan::standard();
        let want = crate::bell::chsh(&rho, &plan.settings());
        let mut errs = Vec::new();
        for duration in [1.0, 100.0, 1e4] {
            let mut sq = 0.0;
            for seed in 0..20 {
                let t = simulate_coincidences(&rho, &plan.joint_settings(), duration, &cfg, seed).unwrap();
                sq += (chsh_from_counts(&t, &plan).unwrap().s - want).powi(2);
            }
            errs.push((sq / 20.0).sqrt());
        }
        // RMS error falls by ~10 per factor 100 in duration.
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((5.0..20.0).contains(&ratio), "{errs:?}");
        }
    }
}
