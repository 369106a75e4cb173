//! Entanglement and mixedness measures for two qubits, the analytic
//! tangle/linear-entropy frontiers of the Werner and MEMS families, and the
//! nonlocality region classification.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::linalg::{self, kron, pauli_y};
use crate::qstate::{DensityMatrix, MemsParams};

/// Concurrences below this are reported as exactly zero.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Werner,
    Mems,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Werner => "werner",
            Family::Mems => "mems",
        }
    }

    pub fn state(&self, p: f64) -> Result<DensityMatrix> {
        match self {
            Family::Werner => crate::qstate::werner(p),
            Family::Mems => crate::qstate::mems(p),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "werner" => Ok(Family::Werner),
            "mems" => Ok(Family::Mems),
            other => Err(format!("unknown family `{other}` (expected werner or mems)")),
        }
    }
}

/// Wootters concurrence.
///
/// The `λ_i` are the singular values of `ξᵀ (σy⊗σy) ξ` for any factor
/// `ρ = ξ ξ†`; they coincide with the square roots of the eigenvalues of
/// `ρ (σy⊗σy) ρ* (σy⊗σy)` but avoid the square root of round-off.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let xi = linalg::psd_factor(rho.matrix());
    let yy = kron(&pauli_y(), &pauli_y());
    let tau = xi.transpose() * yy * xi;
    let mut s: Vec<f64> = tau.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let c = s[0] - s[1] - s[2] - s[3];
    if c > ZERO_TOL {
        c.min(1.0)
    } else {
        0.0
    }
}

/// Squared concurrence.
pub fn tangle(rho: &DensityMatrix) -> f64 {
    concurrence(rho).powi(2)
}

/// `(4/3)(1 - Tr ρ²)`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    (4.0 / 3.0 * (1.0 - rho.purity())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptResult {
    pub separable: bool,
    /// `2 max(0, -λ_min(ρ^{T_B}))`.
    pub negativity: f64,
    pub min_eigenvalue: f64,
}

/// Peres-Horodecki test, exact for two qubits.
pub fn is_separable_ppt(rho: &DensityMatrix) -> PptResult {
    let pt = linalg::partial_transpose_b(rho.matrix());
    let min = linalg::eigvalsh(&pt)[3];
    PptResult {
        separable: min >= -crate::qstate::PSD_TOL,
        negativity: 2.0 * (-min).max(0.0),
        min_eigenvalue: min,
    }
}

pub const WERNER_SEPARABLE_SL: f64 = 8.0 / 9.0;
pub const MEMS_BRANCH_SL: f64 = 16.0 / 27.0;

/// Analytic tangle as a function of linear entropy along a family.
///
/// Werner: `¼(1 - 3√(1 - S))²` up to `S = 8/9`, zero above.
/// MEMS: `¼(1 + √(1 - 3S/2))²` up to `16/27`, then `4/3 - 3S/2` up to
/// `8/9`, zero above.
pub fn tangle_curve(family: Family, s_l: f64) -> Result<f64> {
    check_range("S_L", s_l, 0.0, 1.0, "[0, 1]")?;
    let t = match family {
        Family::Werner => {
            if s_l <= WERNER_SEPARABLE_SL {
                0.25 * (1.0 - 3.0 * (1.0 - s_l).sqrt()).powi(2)
            } else {
                0.0
            }
        }
        Family::Mems => {
            if s_l <= MEMS_BRANCH_SL {
                0.25 * (1.0 + (1.0 - 1.5 * s_l).max(0.0).sqrt()).powi(2)
            } else if s_l <= WERNER_SEPARABLE_SL {
                4.0 / 3.0 - 1.5 * s_l
            } else {
                0.0
            }
        }
    };
    Ok(t.max(0.0))
}

/// One point of the tangle/linear-entropy plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    #[serde(rename = "S_L")]
    pub linear_entropy: f64,
    #[serde(rename = "T")]
    pub tangle: f64,
    pub family: Family,
    pub p: f64,
}

impl EntropyPoint {
    pub fn of(rho: &DensityMatrix, family: Family, p: f64) -> Self {
        Self {
            linear_entropy: linear_entropy(rho),
            tangle: tangle(rho),
            family,
            p,
        }
    }

    /// Height above the MEMS frontier; positive values are unphysical
    /// beyond round-off.
    pub fn excess_over_frontier(&self) -> f64 {
        let s = self.linear_entropy.clamp(0.0, 1.0);
        self.tangle - tangle_curve(Family::Mems, s).unwrap_or(0.0)
    }
}

/// Writes points as CSV with header `S_L,T,family,p`.
pub fn write_entropy_csv<W: Write>(out: W, points: &[EntropyPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(crate::csvio::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    ViolatesLocalRealism,
    NonseparableNoChshViolation,
    SeparableLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlocalityClass {
    pub family: Family,
    pub region: Region,
    /// Linear-entropy interval of the region, `[lo, hi)` (closed at 1).
    pub s_l_range: (f64, f64),
}

/// Linear entropy of `mems(1/√2)`, the MEMS CHSH threshold (≈ 0.552).
pub fn mems_violation_sl() -> f64 {
    let p = FRAC_1_SQRT_2;
    linear_entropy(&MemsParams::new(p).expect("in range").state())
}

/// Region of a family member with weight `p`. The CHSH threshold is strict:
/// `p = 1/√2` does not violate. The MEMS family has no separable region.
pub fn classify(family: Family, p: f64) -> Result<NonlocalityClass> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let violates = p > FRAC_1_SQRT_2;
    let (region, s_l_range) = match family {
        Family::Werner => {
            if violates {
                (Region::ViolatesLocalRealism, (0.0, 0.5))
            } else if p > 1.0 / 3.0 {
                (Region::NonseparableNoChshViolation, (0.5, WERNER_SEPARABLE_SL))
            } else {
                (Region::SeparableLocal, (WERNER_SEPARABLE_SL, 1.0))
            }
        }
        Family::Mems => {
            let edge = mems_violation_sl();
            if violates {
                (Region::ViolatesLocalRealism, (0.0, edge))
            } else {
                (Region::NonseparableNoChshViolation, (edge, WERNER_SEPARABLE_SL))
            }
        }
    };
    Ok(NonlocalityClass {
        family,
        region,
        s_l_range,
    })
}

/// `Tr(ρ σ_i⊗σ_j)` for `i, j ∈ {x, y, z}`.
pub fn correlation_tensor(rho: &DensityMatrix) -> nalgebra::Matrix3<f64> {
    let p = linalg::paulis();
    nalgebra::Matrix3::from_fn(|i, j| rho.expectation(&kron(&p[i + 1], &p[j + 1])))
}
