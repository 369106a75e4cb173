use std::fmt;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use ering_core::qstate::{self, BellKind, DensityMatrix, MatrixJson};
use ering_core::{bell, entanglement, tomography, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateFamily {
    /// p·singlet + (1 − p)·I/4; give `--p` or `--f`.
    Werner,
    /// Maximally entangled mixed state; `--p`.
    Mems,
    /// |HH⟩ + e^{iφ}|VV⟩ or |HV⟩ + e^{iφ}|VH⟩; `--kind`, `--phi`.
    Bell,
    Singlet,
    /// Werner state rotated onto √a|HH⟩ + √(1−a)|VV⟩; `--f`, `--a`.
    Tuned,
    /// α|HH⟩ + β|VV⟩ from the pump waveplate; `--theta-p-deg`.
    Nonmax,
    /// I/4.
    Mixed,
    /// Density matrix JSON file; `--matrix`.
    File,
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Phi,
    Psi,
}

#[derive(Debug, Clone, Args)]
pub struct StateParams {
    /// Singlet (or MEMS) weight in [0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Fidelity to the singlet in [1/4, 1].
    #[arg(long)]
    pub f: Option<f64>,
    /// Weight of |HH⟩ for `tuned`, in [1/2, 1].
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, value_enum, default_value = "phi")]
    pub kind: KindArg,
    /// Relative phase of a Bell state, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phi: f64,
    /// Pump half-wave-plate angle in degrees, [0, 45].
    #[arg(long)]
    pub theta_p_deg: Option<f64>,
    /// JSON file in the `{"basis", "re", "im"}` layout.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

fn need(v: Option<f64>, flag: &str, family: StateFamily) -> Result<f64> {
    v.ok_or_else(|| Error::Domain(format!("{family} needs --{flag}")))
}

pub fn build(family: StateFamily, a: &StateParams) -> Result<DensityMatrix> {
    match family {
        StateFamily::Werner => match (a.p, a.f) {
            (Some(p), None) => qstate::werner(p),
            (None, Some(f)) => qstate::werner_from_fidelity(f),
            _ => Err(Error::Domain("werner needs exactly one of --p, --f".into())),
        },
        StateFamily::Mems => qstate::mems(need(a.p, "p", family)?),
        StateFamily::Bell => {
            let kind = match a.kind {
                KindArg::Phi => BellKind::Phi,
                KindArg::Psi => BellKind::Psi,
            };
            Ok(qstate::bell_state(kind, a.phi).density())
        }
        StateFamily::Singlet => Ok(qstate::singlet_projector()),
        StateFamily::Tuned => qstate::tune_entanglement(need(a.f, "f", family)?, need(a.a, "a", family)?),
        StateFamily::Nonmax => {
            Ok(qstate::nonmax_state(need(a.theta_p_deg, "theta-p-deg", family)?.to_radians())?.density())
        }
        StateFamily::Mixed => Ok(DensityMatrix::maximally_mixed()),
        StateFamily::File => {
            let path = a
                .matrix
                .as_ref()
                .ok_or_else(|| Error::Domain("file needs --matrix".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
                line: None,
                msg: format!("cannot read {}: {e}", path.display()),
            })?;
            let json: MatrixJson = serde_json::from_str(&text).map_err(|e| Error::Format {
                line: Some(e.line()),
                msg: e.to_string(),
            })?;
            DensityMatrix::from_json(&json)
        }
    }
}

/// Matrix plus measures. Bloch angles in `chsh_settings_rad` are radians.
pub fn summary(rho: &DensityMatrix) -> Result<Value> {
    let ppt = entanglement::is_separable_ppt(rho);
    let opt = bell::chsh_optimize(rho)?;
    let tangle = entanglement::tangle(rho);
    let region = if opt.abs_s() > 2.0 {
        "violates_local_realism"
    } else if tangle > 0.0 {
        "nonseparable_no_chsh_violation"
    } else {
        "separable_local"
    };
    Ok(json!({
        "density_matrix": rho.to_json(),
        "tangle": tangle,
        "concurrence": entanglement::concurrence(rho),
        "linear_entropy": entanglement::linear_entropy(rho),
        "fidelity_to_singlet": tomography::fidelity(rho, &qstate::singlet_projector()),
        "negativity": ppt.negativity,
        "ppt_separable": ppt.separable,
        "region": region,
        "abs_s_max": opt.abs_s(),
        "chsh_settings_rad": opt.settings,
    }))
}
