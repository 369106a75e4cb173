//! Two-qubit polarization tomography: projector settings, count simulation,
//! linear inversion and maximum-likelihood reconstruction.

mod ml;
mod report;

pub use ml::{log_likelihood, ml_reconstruct, ml_reconstruct_with, MlEstimate, MlOptions};
pub use report::ReconstructionReport;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio::Count;
use crate::error::{Error, Result};
use crate::linalg::{c, eigvalsh, kron, kron_ket, nuclear_norm, paulis, r, sqrt_psd, Ket2, Ket4, Mat4};
use crate::qstate::DensityMatrix;
use crate::source::counting::poisson;

/// Single-photon analyzer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projector {
    H,
    V,
    /// `(H + V)/√2`
    D,
    /// `(H − V)/√2`
    A,
    /// `(H + iV)/√2`
    L,
    /// `(H − iV)/√2`
    R,
    /// `cos(Θ/2) H + e^{iΦ} sin(Θ/2) V`, radians.
    Elliptical {
        theta: f64,
        phi: f64,
    },
}

impl Projector {
    /// Linear polarizer at `theta` radians.
    pub fn linear(theta: f64) -> Self {
        Projector::Elliptical {
            theta: 2.0 * theta,
            phi: 0.0,
        }
    }

    pub fn ket(&self) -> Ket2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Projector::H => Ket2::new(r(1.0), r(0.0)),
            Projector::V => Ket2::new(r(0.0), r(1.0)),
            Projector::D => Ket2::new(r(s), r(s)),
            Projector::A => Ket2::new(r(s), r(-s)),
            Projector::L => Ket2::new(r(s), c(0.0, s)),
            Projector::R => Ket2::new(r(s), c(0.0, -s)),
            Projector::Elliptical { theta, phi } => {
                let (sn, cs) = (theta / 2.0).sin_cos();
                Ket2::new(r(cs), c(0.0, phi).exp() * sn)
            }
        }
    }
}

impl fmt::Display for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projector::H => f.write_str("H"),
            Projector::V => f.write_str("V"),
            Projector::D => f.write_str("D"),
            Projector::A => f.write_str("A"),
            Projector::L => f.write_str("L"),
            Projector::R => f.write_str("R"),
            Projector::Elliptical { theta, phi } => write!(f, "E({theta},{phi})"),
        }
    }
}

impl FromStr for Projector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        Ok(match s {
            "H" => Projector::H,
            "V" => Projector::V,
            "D" => Projector::D,
            "A" => Projector::A,
            "L" => Projector::L,
            "R" => Projector::R,
            _ => {
                let inner = s
                    .strip_prefix("E(")
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown projector {s:?}; expected H, V, D, A, L, R or E(Theta,Phi)"))?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| format!("projector {s:?} needs two angles"))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("bad angle {t:?} in {s:?}: {e}"))
                };
                Projector::Elliptical {
                    theta: parse(a)?,
                    phi: parse(b)?,
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoSetting {
    pub proj1: Projector,
    pub proj2: Projector,
}

impl TomoSetting {
    pub fn ket(&self) -> Ket4 {
        kron_ket(&self.proj1.ket(), &self.proj2.ket())
    }

    pub fn projector(&self) -> Mat4 {
        let k = self.ket();
        k * k.adjoint()
    }
}

/// The sixteen settings HH, HV, VV, VH, RH, RV, DV, DH, DR, DD, RD, HD, VD,
/// VL, HL, RL, in that order.
pub fn standard_settings() -> Vec<TomoSetting> {
    use Projector::*;
    [
        (H, H),
        (H, V),
        (V, V),
        (V, H),
        (R, H),
        (R, V),
        (D, V),
        (D, H),
        (D, R),
        (D, D),
        (R, D),
        (H, D),
        (V, D),
        (V, L),
        (H, L),
        (R, L),
    ]
    .into_iter()
    .map(|(proj1, proj2)| TomoSetting { proj1, proj2 })
    .collect()
}

/// Real design matrix `M[k, 4i+j] = Tr(Π_k σ_i⊗σ_j) / 4`, so that expected
/// counts are `N · M r` for `ρ = ¼ Σ r_ij σ_i⊗σ_j`.
pub fn design_matrix(settings: &[TomoSetting]) -> DMatrix<f64> {
    let p = paulis();
    let basis: Vec<Mat4> = (0..16).map(|k| kron(&p[k / 4], &p[k % 4])).collect();
    DMatrix::from_fn(settings.len(), 16, |row, col| {
        let proj = settings[row].projector();
        crate::linalg::trace_product_re(&proj, &basis[col]) / 4.0
    })
}

/// Ratio of largest to smallest singular value of the design matrix.
pub fn condition_number(settings: &[TomoSetting]) -> f64 {
    let sv = design_matrix(settings).singular_values();
    let max = sv.max();
    let min = sv.min();
    max / min
}

fn design_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let tol = 1e-10 * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomoData {
    settings: Vec<TomoSetting>,
    counts: Vec<f64>,
    total_flux_estimate: f64,
}

#[derive(Deserialize)]
struct CsvRow {
    setting_index: usize,
    proj1: String,
    proj2: String,
    counts: f64,
}

#[derive(Serialize)]
struct OutRow {
    setting_index: usize,
    proj1: String,
    proj2: String,
    counts: Count,
}

impl TomoData {
    /// Counts must be nonnegative and the settings informationally complete.
    pub fn new(settings: Vec<TomoSetting>, counts: Vec<f64>) -> Result<Self> {
        if settings.len() != counts.len() {
            return Err(Error::Domain(format!(
                "{} settings but {} counts",
                settings.len(),
                counts.len()
            )));
        }
        if let Some(n) = counts.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
            return Err(Error::Domain(format!("counts must be finite and nonnegative, got {n}")));
        }
        let m = design_matrix(&settings);
        let rank = design_rank(&m);
        if rank < 16 {
            return Err(Error::Domain(format!(
                "settings are not informationally complete (design rank {rank} < 16)"
            )));
        }
        let mut data = Self {
            settings,
            counts,
            total_flux_estimate: 0.0,
        };
        data.total_flux_estimate = data.pauli_coefficients()?[0];
        Ok(data)
    }

    pub fn settings(&self) -> &[TomoSetting] {
        &self.settings
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Counts per unit probability, from the identity component of the
    /// linear inversion (for the standard set, the sum of the HH, HV, VH, VV
    /// counts).
    pub fn total_flux_estimate(&self) -> f64 {
        self.total_flux_estimate
    }

    /// Least-squares `r′` with `counts ≈ M r′`; `r′₀₀` is the flux.
    fn pauli_coefficients(&self) -> Result<DVector<f64>> {
        let m = design_matrix(&self.settings);
        let n = DVector::from_column_slice(&self.counts);
        m.svd(true, true)
            .solve(&n, 1e-12)
            .map_err(|e| Error::Domain(format!("design matrix inversion failed: {e}")))
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.settings.clone(), self.counts.iter().map(|n| n * k).collect())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::format(Some(1), e.to_string()))?
            .clone();
        let want = ["setting_index", "proj1", "proj2", "counts"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(Error::format(Some(1), format!("expected header `{}`", want.join(","))));
        }
        let mut rows: Vec<(usize, TomoSetting, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(e.position().map(|p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map(|p| p.line() as usize);
            let row: CsvRow = rec
                .deserialize(Some(&headers))
                .map_err(|e| Error::format(line, e.to_string()))?;
            let proj1 = row.proj1.parse().map_err(|e: String| Error::format(line, e))?;
            let proj2 = row.proj2.parse().map_err(|e: String| Error::format(line, e))?;
            if !(row.counts.is_finite() && row.counts >= 0.0) {
                return Err(Error::format(
                    line,
                    format!("negative or non-finite counts {}", row.counts),
                ));
            }
            if rows.iter().any(|(i, _, _)| *i == row.setting_index) {
                return Err(Error::format(
                    line,
                    format!("duplicate setting_index {}", row.setting_index),
                ));
            }
            rows.push((row.setting_index, TomoSetting { proj1, proj2 }, row.counts));
        }
        rows.sort_by_key(|(i, _, _)| *i);
        let (settings, counts) = rows.into_iter().map(|(_, s, n)| (s, n)).unzip();
        Self::new(settings, counts)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (k, (s, n)) in self.settings.iter().zip(&self.counts).enumerate() {
            w.serialize(OutRow {
                setting_index: k,
                proj1: s.proj1.to_string(),
                proj2: s.proj2.to_string(),
                counts: Count(*n),
            })
            .map_err(crate::csvio::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact expected counts `N·Tr(ρ Π_k)` over the standard settings.
pub fn expected_tomography(rho: &DensityMatrix, counts_per_setting: f64) -> Result<TomoData> {
    check_flux(counts_per_setting)?;
    let settings = standard_settings();
    let counts = settings
        .iter()
        .map(|s| (counts_per_setting * rho.expectation(&s.projector())).max(0.0))
        .collect();
    TomoData::new(settings, counts)
}

/// Poisson counts with mean `N·Tr(ρ Π_k)` at each standard setting, where
/// `N = counts_per_setting` is the count rate a setting would see if it
/// passed every pair (so `I/4` gives `N/4` everywhere). Setting `k` draws
/// from stream `k` of a ChaCha generator seeded with `seed`.
pub fn simulate_tomography(rho: &DensityMatrix, counts_per_setting: f64, seed: u64) -> Result<TomoData> {
    check_flux(counts_per_setting)?;
    let settings = standard_settings();
    let counts = settings
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mean = (counts_per_setting * rho.expectation(&s.projector())).max(0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            poisson(mean, &mut rng)
        })
        .collect();
    TomoData::new(settings, counts)
}

fn check_flux(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("counts_per_setting must be positive, got {n}")))
    }
}

/// Result of linear inversion. The matrix is Hermitian with unit trace but
/// may have negative eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub matrix: Mat4,
    pub min_eigenvalue: f64,
}

impl LinearEstimate {
    /// False when noise has pushed an eigenvalue below `-1e-10`.
    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue >= -crate::qstate::PSD_TOL
    }

    /// Eigenvalues clipped at zero, then renormalized.
    pub fn psd_projection(&self) -> DensityMatrix {
        let (vals, vecs) = crate::linalg::eigh(&self.matrix);
        let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let m = if total > 0.0 {
            let d = Mat4::from_diagonal(&Ket4::from_fn(|i, _| r(clipped[i] / total)));
            vecs * d * vecs.adjoint()
        } else {
            Mat4::identity() * r(0.25)
        };
        DensityMatrix::repair(&m).expect("clipped spectrum is a valid state")
    }
}

pub fn linear_reconstruct(data: &TomoData) -> Result<LinearEstimate> {
    let coeffs = data.pauli_coefficients()?;
    let norm = coeffs[0];
    if !(norm > 0.0) {
        return Err(Error::Domain("no counts to normalize the linear estimate".into()));
    }
    let p = paulis();
    let mut m = Mat4::zeros();
    for k in 0..16 {
        m += kron(&p[k / 4], &p[k % 4]) * r(coeffs[k] / (4.0 * norm));
    }
    let m = crate::linalg::hermitian_part(&m);
    Ok(LinearEstimate {
        min_eigenvalue: eigvalsh(&m)[3],
        matrix: m,
    })
}

/// Uhlmann fidelity `(Tr √(√ρ₁ ρ₂ √ρ₁))²`, computed as the squared nuclear
/// norm of `√ρ₁ √ρ₂`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let a = sqrt_psd(rho1.matrix());
    let b = sqrt_psd(rho2.matrix());
    nuclear_norm(&(a * b)).powi(2).clamp(0.0, 1.0)
}
