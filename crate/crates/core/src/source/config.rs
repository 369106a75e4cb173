use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Apparatus parameters, SI units throughout. Keys in the TOML form match the
/// field names, except `R` (mirror radius) and `mask_D` (ring mask diameter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub lambda_pump: f64,
    pub lambda: f64,
    /// Cone half-aperture, radians.
    pub alpha: f64,
    /// Radius of curvature of the spherical mirror.
    #[serde(rename = "R")]
    pub mirror_radius: f64,
    pub f: f64,
    #[serde(rename = "mask_D")]
    pub mask_diameter: f64,
    pub mask_delta: f64,
    /// Iris radius; equal to `mask_D` for the fully open ring.
    pub iris_r: f64,
    /// Generated pairs per second over the whole ring.
    pub pair_rate: f64,
    pub detector_qe: f64,
    pub dark_rate: f64,
    /// Interference-filter FWHM bandwidth.
    pub filter_bandwidth: f64,
    pub tau_coh: f64,
    /// Diameter of the pumped region of the crystal.
    pub pump_waist: f64,
    /// Optical transmission of one arm pair, detectors excluded.
    pub transmission: f64,
    pub coincidence_window: f64,
    /// Weight `v` in `v ρ + (1 − v) I/4` applied to every state before
    /// detection; fringe visibility in any analyzer basis scales by `v`.
    pub visibility: f64,
    /// Two-photon interference visibility of the Ou-Mandel scan.
    pub hom_visibility: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            lambda_pump: 363.8e-9,
            lambda: 727.6e-9,
            alpha: 2.9_f64.to_radians(),
            mirror_radius: 0.15,
            f: 0.15,
            mask_diameter: 1.5e-2,
            mask_delta: 0.07e-2,
            iris_r: 1.5e-2,
            pair_rate: 2e5,
            detector_qe: 0.65,
            dark_rate: 50.0,
            filter_bandwidth: 6e-9,
            tau_coh: 140e-15,
            pump_waist: 150e-6,
            transmission: 0.35,
            coincidence_window: 10e-9,
            visibility: 1.0,
            hom_visibility: 0.88,
        }
    }
}

impl SourceConfig {
    /// Narrow-cone setup used for the MEMS runs.
    pub fn mems() -> Self {
        Self {
            alpha: 1.4_f64.to_radians(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_pump", self.lambda_pump),
            ("lambda", self.lambda),
            ("R", self.mirror_radius),
            ("f", self.f),
            ("mask_D", self.mask_diameter),
            ("mask_delta", self.mask_delta),
            ("pair_rate", self.pair_rate),
            ("filter_bandwidth", self.filter_bandwidth),
            ("tau_coh", self.tau_coh),
            ("pump_waist", self.pump_waist),
            ("coincidence_window", self.coincidence_window),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [("alpha", self.alpha), ("dark_rate", self.dark_rate)];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let unit = [
            ("detector_qe", self.detector_qe),
            ("transmission", self.transmission),
            ("visibility", self.visibility),
            ("hom_visibility", self.hom_visibility),
        ];
        for (name, v) in unit {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.iris_r >= 0.0 && self.iris_r <= self.mask_diameter) {
            return Err(Error::Domain(format!(
                "iris_r = {} must lie in [0, mask_D = {}]",
                self.iris_r, self.mask_diameter
            )));
        }
        if self.alpha >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Domain(format!(
                "alpha = {} rad is not a cone aperture",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Parses and validates. Missing keys take their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            Error::format(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat struct of floats always serializes")
    }
}

/// `2αf`.
pub fn ring_diameter(config: &SourceConfig) -> f64 {
    2.0 * config.alpha * config.f
}

/// Ring area passed by an iris of radius `r`: `2Dδ·arcsin(r/D)`.
pub fn sector_area(r: f64, config: &SourceConfig) -> Result<f64> {
    let d = config.mask_diameter;
    if !(r >= 0.0 && r <= d) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            range: "[0, mask_D]",
        });
    }
    Ok(2.0 * d * config.mask_delta * (r / d).asin())
}

/// Fraction of the ring passed by the iris, normalized to the `r = D` area
/// `πDδ`.
pub fn iris_fraction(r: f64, config: &SourceConfig) -> Result<f64> {
    let full = std::f64::consts::PI * config.mask_diameter * config.mask_delta;
    Ok(sector_area(r, config)? / full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = SourceConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        assert!(text.contains("R = ") && text.contains("mask_D = "));
        assert_eq!(SourceConfig::from_toml_str(&text).unwrap(), cfg);
        assert!((cfg.lambda_pump * 2.0 - cfg.lambda).abs() < 1e-20);
    }

    #[test]
    fn partial_files_and_errors() {
        let cfg = SourceConfig::from_toml_str("pair_rate = 1e6\nR = 0.2\n").unwrap();
        assert_eq!(cfg.pair_rate, 1e6);
        assert_eq!(cfg.mirror_radius, 0.2);
        assert_eq!(cfg.f, 0.15);
        match SourceConfig::from_toml_str("f = 0.1\nbogus = 3\n") {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SourceConfig::from_toml_str("detector_qe = 1.5").is_err());
        assert!(SourceConfig::from_toml_str("iris_r = 0.02").is_err());
    }

    #[test]
    fn ring_diameters() {
        let cfg = SourceConfig::default();
        assert!((ring_diameter(&cfg) - 1.518e-2).abs() < 1e-5);
        let flat = SourceConfig {
            alpha: 0.0,
            ..cfg.clone()
        };
        assert_eq!(ring_diameter(&flat), 0.0);
        assert!((ring_diameter(&SourceConfig::mems()) - 7.33e-3).abs() < 1e-5);
    }

    #[test]
    fn areas() {
        let cfg = SourceConfig::default();
        assert_eq!(sector_area(0.0, &cfg).unwrap(), 0.0);
        let full = std::f64::consts::PI * cfg.mask_diameter * cfg.mask_delta;
        assert!((sector_area(cfg.mask_diameter, &cfg).unwrap() - full).abs() < 1e-18);
        // 2·1.5e-2·7e-4·arcsin(0.05)
        let a = sector_area(0.75e-3, &cfg).unwrap();
        assert!((a - 1.05044e-6).abs() < 1e-10, "{a}");
        assert!(sector_area(0.016, &cfg).is_err());
        assert!((iris_fraction(cfg.mask_diameter, &cfg).unwrap() - 1.0).abs() < 1e-15);
    }
}
