//! State synthesis by assigning optical treatments to angular sectors of the
//! emission ring. Each sector delivers its conditional two-photon state with
//! a weight proportional to its angular fraction times its throughput.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::linalg::r;
use crate::qstate::{bell_state, Basis, BellKind, DensityMatrix, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    /// `|HH⟩ + e^{iφ}|VV⟩`.
    Coherent,
    /// Delay longer than the coherence time: `½(|HH⟩⟨HH| + |VV⟩⟨VV|)`.
    Decohered,
    /// Half-wave plate on arm 2: `|HV⟩ + e^{iφ}|VH⟩`.
    FlippedAndCoherent,
    FlippedAndDecohered,
    /// Only the direct cone (`|HH⟩`) survives; half of the pairs are lost.
    ReflectedConeBlocked,
    /// As above with the flip: `|HV⟩`.
    ReflectedConeBlockedFlipped,
    Blocked,
}

impl Treatment {
    /// Fraction of the sector's pairs that reach the detectors.
    pub fn throughput(self) -> f64 {
        match self {
            Treatment::Blocked => 0.0,
            Treatment::ReflectedConeBlocked | Treatment::ReflectedConeBlockedFlipped => 0.5,
            _ => 1.0,
        }
    }

    /// State of the detected pairs, `None` when nothing is detected.
    pub fn conditional_state(self, phi: f64) -> Option<DensityMatrix> {
        let basis = |b| PureState::basis(b).density();
        let even_mix = |a: Basis, b: Basis| {
            let m = (basis(a).matrix() + basis(b).matrix()) * r(0.5);
            DensityMatrix::new(m).expect("mixture of basis states")
        };
        Some(match self {
            Treatment::Coherent => bell_state(BellKind::Phi, phi).density(),
            Treatment::Decohered => even_mix(Basis::HH, Basis::VV),
            Treatment::FlippedAndCoherent => bell_state(BellKind::Psi, phi).density(),
            Treatment::FlippedAndDecohered => even_mix(Basis::HV, Basis::VH),
            Treatment::ReflectedConeBlocked => basis(Basis::HH),
            Treatment::ReflectedConeBlockedFlipped => basis(Basis::HV),
            Treatment::Blocked => return None,
        })
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Treatment::Coherent => "coherent",
            Treatment::Decohered => "decohered",
            Treatment::FlippedAndCoherent => "flipped_and_coherent",
            Treatment::FlippedAndDecohered => "flipped_and_decohered",
            Treatment::ReflectedConeBlocked => "reflected_cone_blocked",
            Treatment::ReflectedConeBlockedFlipped => "reflected_cone_blocked_flipped",
            Treatment::Blocked => "blocked",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub label: String,
    pub angular_fraction: f64,
    pub treatment: Treatment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorPartition {
    sectors: Vec<Sector>,
}

impl SectorPartition {
    /// Fractions must lie in `[0, 1]` and sum to 1 within 1e-9; labels must be
    /// unique.
    pub fn new(sectors: Vec<Sector>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &sectors {
            if !seen.insert(s.label.as_str()) {
                return Err(Error::Domain(format!("duplicate sector label {:?}", s.label)));
            }
            if !(0.0..=1.0).contains(&s.angular_fraction) {
                return Err(Error::Domain(format!(
                    "sector {:?} has fraction {} outside [0, 1]",
                    s.label, s.angular_fraction
                )));
            }
        }
        let total: f64 = sectors.iter().map(|s| s.angular_fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("sector fractions sum to {total}, not 1")));
        }
        Ok(Self { sectors })
    }

    fn from_parts(parts: &[(&str, f64, Treatment)]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .filter(|(_, w, _)| *w > 0.0)
                .map(|(label, w, t)| Sector {
                    label: (*label).to_string(),
                    angular_fraction: *w,
                    treatment: *t,
                })
                .collect(),
        )
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Same sectors with every coherent treatment replaced by its decohered
    /// counterpart, as when a delay plate intercepts one photon of every
    /// pair.
    pub fn decohered(&self) -> Self {
        let sectors = self
            .sectors
            .iter()
            .map(|s| Sector {
                treatment: match s.treatment {
                    Treatment::Coherent => Treatment::Decohered,
                    Treatment::FlippedAndCoherent => Treatment::FlippedAndDecohered,
                    t => t,
                },
                ..s.clone()
            })
            .collect();
        Self { sectors }
    }
}

/// Detected state of a partition at relative phase `φ`.
pub fn synthesize(partition: &SectorPartition, phi: f64) -> Result<DensityMatrix> {
    let mut acc = crate::linalg::Mat4::zeros();
    let mut total = 0.0;
    for s in partition.sectors() {
        let w = s.angular_fraction * s.treatment.throughput();
        if w <= 0.0 {
            continue;
        }
        if let Some(rho) = s.treatment.conditional_state(phi) {
            acc += rho.matrix() * r(w);
            total += w;
        }
    }
    if total <= 0.0 {
        return Err(Error::Domain("every sector is blocked; no pairs are detected".into()));
    }
    DensityMatrix::new(acc * r(1.0 / total))
}

/// Sector A (fraction `p`) carries the singlet, B and C (each `(1−p)/2`)
/// carry the flipped and unflipped decohered mixtures. Use with `φ = π`.
pub fn werner_partition(p: f64) -> Result<SectorPartition> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let rest = (1.0 - p) / 2.0;
    SectorPartition::from_parts(&[
        ("A", p, Treatment::FlippedAndCoherent),
        ("B", rest, Treatment::FlippedAndDecohered),
        ("C", rest, Treatment::Decohered),
    ])
}

/// Partition reproducing the maximally entangled mixed state of singlet
/// weight `p` at `φ = π`. The `|VV⟩` term is absent because the reflected
/// cone is blocked over part of the ring, which leaves `|HH⟩` alone at half
/// throughput; the weights below are solved from the target diagonal.
pub fn mems_partition(p: f64) -> Result<SectorPartition> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    if p < 2.0 / 3.0 {
        // Normalizing weight 3/4: singlet p, HV/VH mixture 2/3 − p, HH 1/3.
        SectorPartition::from_parts(&[
            ("D", 0.5, Treatment::ReflectedConeBlocked),
            ("E", 0.75 * p, Treatment::FlippedAndCoherent),
            ("F", 0.5 - 0.75 * p, Treatment::FlippedAndDecohered),
        ])
    } else {
        // Normalizing weight 1/(2 − p): singlet p, HH 1 − p.
        SectorPartition::from_parts(&[
            ("D", 2.0 * (1.0 - p) / (2.0 - p), Treatment::ReflectedConeBlocked),
            ("E", p / (2.0 - p), Treatment::FlippedAndCoherent),
        ])
    }
}

/// Two-step route to the maximally mixed state: half the ring flipped gives
/// `½(|Φ⁻⟩⟨Φ⁻| + |Ψ⁻⟩⟨Ψ⁻|)` at `φ = π`; decohering it then gives `I/4`.
pub fn identity_recipe() -> (SectorPartition, SectorPartition) {
    let first = SectorPartition::from_parts(&[
        ("flipped", 0.5, Treatment::FlippedAndCoherent),
        ("direct", 0.5, Treatment::Coherent),
    ])
    .expect("valid fractions");
    let second = first.decohered();
    (first, second)
}
