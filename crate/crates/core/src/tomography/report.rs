use serde::{Deserialize, Serialize};

use super::{fidelity, linear_reconstruct, MlEstimate, TomoData};
use crate::bell::{chsh_optimize, ChshSettings};
use crate::entanglement::{linear_entropy, tangle};
use crate::error::Result;
use crate::qstate::{DensityMatrix, MatrixJson};

/// Summary written next to a reconstructed state. Bloch angles inside
/// `chsh_settings` are in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub density_matrix: MatrixJson,
    /// Name of the state the data were compared against, if any.
    pub target: Option<String>,
    pub fidelity: Option<f64>,
    pub tangle: f64,
    pub linear_entropy: f64,
    pub abs_s_max: f64,
    pub chsh_settings: ChshSettings,
    pub log_likelihood: f64,
    pub flux: f64,
    pub max_abs_imag: f64,
    /// Smallest eigenvalue of the linear-inversion estimate; negative values
    /// mean the raw inversion was unphysical.
    pub linear_min_eigenvalue: f64,
}

impl ReconstructionReport {
    pub fn build(data: &TomoData, est: &MlEstimate, target: Option<(&str, &DensityMatrix)>) -> Result<Self> {
        let opt = chsh_optimize(&est.rho)?;
        let linear_min_eigenvalue = linear_reconstruct(data).map(|l| l.min_eigenvalue).unwrap_or(f64::NAN);
        Ok(Self {
            density_matrix: est.rho.to_json(),
            target: target.map(|(name, _)| name.to_string()),
            fidelity: target.map(|(_, rho)| fidelity(&est.rho, rho)),
            tangle: tangle(&est.rho),
            linear_entropy: linear_entropy(&est.rho),
            abs_s_max: opt.abs_s(),
            chsh_settings: opt.settings,
            log_likelihood: est.log_likelihood,
            flux: est.flux,
            max_abs_imag: est.rho.max_imag(),
            linear_min_eigenvalue,
        })
    }
}
