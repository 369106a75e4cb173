//! Two-photon (Ou-Mandel) interference of the `|HV⟩ + e^{iφ}|VH⟩` state
//! behind a beam splitter whose position `x` sets the relative delay `x/c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::counting::poisson;
use super::SourceConfig;
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Transform-limited FWHM duration of a Gaussian spectrum of FWHM `Δλ`:
/// `(2 ln 2 / π) · λ² / (c Δλ)`.
pub fn coherence_time(config: &SourceConfig) -> f64 {
    2.0 * std::f64::consts::LN_2 / std::f64::consts::PI * config.lambda.powi(2)
        / (SPEED_OF_LIGHT * config.filter_bandwidth)
}

/// FWHM of the interference envelope in beam-splitter position.
pub fn dip_fwhm(config: &SourceConfig) -> f64 {
    SPEED_OF_LIGHT * coherence_time(config)
}

/// Envelope width `σ` in `exp(−(x/σ)²)`.
pub fn envelope_sigma(config: &SourceConfig) -> f64 {
    dip_fwhm(config) / (2.0 * std::f64::consts::LN_2.sqrt())
}

/// Normalized coincidence rate `1 − V cos φ · exp(−(x/σ)²)` at each `x`.
pub fn ou_mandel_scan(phi: f64, xs: &[f64], config: &SourceConfig) -> Vec<(f64, f64)> {
    let sigma = envelope_sigma(config);
    let v = config.hom_visibility * phi.cos();
    xs.iter()
        .map(|&x| (x, 1.0 - v * (-(x / sigma).powi(2)).exp()))
        .collect()
}

/// Poisson-sampled scan: `counts_far` is the mean count per point outside
/// the envelope, and each point is reported as counts / `counts_far`.
pub fn simulate_ou_mandel_scan(
    phi: f64,
    xs: &[f64],
    counts_far: f64,
    config: &SourceConfig,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if !(counts_far.is_finite() && counts_far > 0.0) {
        return Err(Error::Domain(format!("counts_far must be positive, got {counts_far}")));
    }
    Ok(ou_mandel_scan(phi, xs, config)
        .into_iter()
        .enumerate()
        .map(|(k, (x, c))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (x, poisson(counts_far * c, &mut rng) / counts_far)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn grid() -> Vec<f64> {
        (-100..=100).map(|k| k as f64 * 1e-6).collect()
    }

    #[test]
    fn width_prediction() {
        let cfg = SourceConfig::default();
        let w = dip_fwhm(&cfg);
        assert!((w / 35e-6 - 1.0).abs() <= 0.2, "{w}");
        assert!((coherence_time(&cfg) / cfg.tau_coh - 1.0).abs() < 0.1);
        // Half depth is reached at ±FWHM/2.
        let half = ou_mandel_scan(0.0, &[w / 2.0], &cfg)[0].1;
        assert!((half - (1.0 - cfg.hom_visibility / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn dip_peak_and_flat() {
        let cfg = SourceConfig::default();
        let dip = ou_mandel_scan(0.0, &[0.0], &cfg)[0].1;
        let peak = ou_mandel_scan(PI, &[0.0], &cfg)[0].1;
        assert!((dip - 0.12).abs() < 1e-12 && (peak - 1.88).abs() < 1e-12);
        for (_, c) in ou_mandel_scan(FRAC_PI_2, &grid(), &cfg) {
            assert!((c - 1.0).abs() < 1e-15);
        }
        for phi in [0.0, 1.0, PI] {
            let far = ou_mandel_scan(phi, &[1e-3], &cfg)[0].1;
            assert!((far - 1.0).abs() < 1e-12);
            for (_, c) in ou_mandel_scan(phi, &grid(), &cfg) {
                assert!(c >= 1.0 - cfg.hom_visibility - 1e-15 && c <= 1.0 + cfg.hom_visibility + 1e-15);
            }
        }
    }

    #[test]
    fn simulated_scan_is_seeded() {
        let cfg = SourceConfig::default();
        let a = simulate_ou_mandel_scan(0.0, &grid(), 1e4, &cfg, 1).unwrap();
        let b = simulate_ou_mandel_scan(0.0, &grid(), 1e4, &cfg, 1).unwrap();
        assert_eq!(a, b);
        assert!(a[100].1 < 0.2);
    }
}
