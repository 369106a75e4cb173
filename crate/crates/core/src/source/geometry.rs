//! Single-arm interferometer geometry: a displacement `Δd` of the spherical
//! mirror changes the optical path of the back-reflected pair relative to the
//! pump, setting the relative phase of the two emission cones.
//!
//! Coordinates are the meridional plane: `z` along the pump, crystal plane at
//! `z = 0`, crystal point `O` at the origin. The mirror's center of curvature
//! sits at `O′ = (0, Δd)`. A pair photon leaves `O` at angle `α` to the axis,
//! hits the mirror at `B′`, is reflected, and re-crosses the crystal plane at
//! `C`.
//!
//! ```text
//!            A′         B′
//!   mirror  --+----...--+--
//!             |        /\
//!             |   OB′ /  \ B′C
//!             |      / α  \
//!   crystal --O-----------C----
//! ```

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::SourceConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGeometry {
    pub delta_d: f64,
    /// Pump path to the mirror vertex, `R + Δd`.
    pub oa_prime: f64,
    pub ob_prime: f64,
    pub b_prime_c: f64,
    /// Relative phase, not wrapped. `φ(0) = 0`.
    pub phi: f64,
    /// Signed offset of the returning photon on the crystal plane.
    pub lateral_offset: f64,
}

impl PhaseGeometry {
    /// `φ` reduced to `[0, 2π)`.
    pub fn phi_mod_2pi(&self) -> f64 {
        self.phi.rem_euclid(2.0 * PI)
    }
}

struct Trace {
    ob: f64,
    bc: f64,
    oc: f64,
}

fn trace(delta_d: f64, radius: f64, alpha: f64) -> Trace {
    let center = Vector2::new(0.0, delta_d);
    let u = Vector2::new(alpha.sin(), alpha.cos());
    // |t·u − O′| = R, forward root.
    let b = -2.0 * u.dot(&center);
    let c = center.norm_squared() - radius * radius;
    let t = (-b + (b * b - 4.0 * c).sqrt()) / 2.0;
    let hit = u * t;
    let normal = (hit - center) / radius;
    let refl = u - normal * (2.0 * u.dot(&normal));
    let s = -hit.y / refl.y;
    let back = hit + refl * s;
    Trace {
        ob: t,
        bc: s,
        oc: back.x,
    }
}

/// Phase `4π·OA′/λ_p − 4π·(OB′ + B′C)/λ`, referenced to its `Δd = 0` value.
pub fn phase_from_displacement(delta_d: f64, config: &SourceConfig) -> Result<PhaseGeometry> {
    let radius = config.mirror_radius;
    if !(delta_d.is_finite() && delta_d.abs() < radius / 10.0) {
        return Err(Error::Domain(format!(
            "|Δd| = {delta_d:e} m is outside the modeled regime |Δd| < R/10 = {:e} m",
            radius / 10.0
        )));
    }
    let tr = trace(delta_d, radius, config.alpha);
    let oa = radius + delta_d;
    // Path excesses over the aligned mirror, which keeps φ(0) = 0 exactly.
    let pump_excess = delta_d;
    let pair_excess = (tr.ob - radius) + (tr.bc - radius);
    let phi = 4.0 * PI * pump_excess / config.lambda_pump - 4.0 * PI * pair_excess / config.lambda;
    Ok(PhaseGeometry {
        delta_d,
        oa_prime: oa,
        ob_prime: tr.ob,
        b_prime_c: tr.bc,
        phi,
        lateral_offset: tr.oc,
    })
}

/// Smallest `Δd ≥ 0` with `|φ(Δd)| = |target|`, by bisection.
pub fn displacement_for_phase(target: f64, config: &SourceConfig) -> Result<f64> {
    let target = target.abs();
    let f = |d: f64| -> Result<f64> { Ok(phase_from_displacement(d, config)?.phi.abs() - target) };
    let hi_limit = config.mirror_radius / 10.0 * (1.0 - 1e-9);
    let mut hi = 1e-6;
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi >= hi_limit {
            hi = hi_limit;
            if f(hi)? < 0.0 {
                return Err(Error::Domain(format!(
                    "phase {target} rad is not reached for |Δd| < R/10"
                )));
            }
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Overlap of the direct and back-reflected pair images on the crystal. The
/// images are displaced by `2·OC` (the reflected photon lands at `OC` on one
/// side, its partner at `OC` on the other), giving
/// `exp(−(2·OC / w)²)` with `w` the pumped-region radius.
pub fn displacement_visibility(delta_d: f64, config: &SourceConfig) -> f64 {
    if !(delta_d.abs() < config.mirror_radius / 10.0) {
        return 0.0;
    }
    let oc = trace(delta_d, config.mirror_radius, config.alpha).oc;
    let w = config.pump_waist / 2.0;
    (-(2.0 * oc / w).powi(2)).exp()
}
