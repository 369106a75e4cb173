//! Figure-data regeneration. Every grid point gets its own seed derived from
//! the master seed, and rows are written in grid order.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use ering_core::bell::{self, AnglePlan};
use ering_core::entanglement::{self, EntropyPoint, Family};
use ering_core::qstate::{self, BellKind, DensityMatrix};
use ering_core::source::{self, SourceConfig};
use ering_core::tomography;
use ering_core::{Error, Result};

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure number: 2, 3, 4, 8, 11 or 12.
    pub id: u32,
    /// Master seed for every Poisson draw.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Figure 3 only: a single beam-splitter phase in radians [default: 0, π/2, π].
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Dwell time per polarizer setting, seconds [default: 1 for fig 2,
    /// 10 for fig 4, 180/16 for fig 12].
    #[arg(long)]
    pub duration: Option<f64>,
    /// Tomography flux per setting for figs 8 and 11; far-from-dip counts
    /// per point for fig 3 [default: 1e5 and 1e4].
    #[arg(long)]
    pub counts: Option<f64>,
}

/// splitmix64 finalizer over `seed ⊕ k`.
fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("{other:?}")),
    }
}

pub fn run(args: &FigureArgs, cfg: &SourceConfig) -> Result<Vec<PathBuf>> {
    let dir = &args.out_dir;
    match args.id {
        2 => fig2(args, cfg, dir),
        3 => fig3(args, cfg, dir),
        4 => fig4(args, cfg, dir),
        8 => entropy_figure(args, cfg, dir, Family::Werner),
        11 => entropy_figure(args, cfg, dir, Family::Mems),
        12 => fig12(args, cfg, dir),
        id => Err(Error::Domain(format!(
            "no data for figure {id}; choose 2, 3, 4, 8, 11 or 12"
        ))),
    }
}

fn phi_minus() -> DensityMatrix {
    qstate::bell_state(BellKind::Phi, PI).density()
}

/// Polarization fringes of |Φ−⟩: coincidences against θ₁ for θ₂ = 0° and 45°.
fn fig2(args: &FigureArgs, cfg: &SourceConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Row {
        theta1_deg: f64,
        coincidences: u64,
    }
    let dwell = args.duration.unwrap_or(1.0);
    let rho = phi_minus();
    let theta1: Vec<f64> = (0..36).map(|k| 5.0 * k as f64).collect();
    let mut outputs = Vec::new();
    for (k, theta2) in [0.0, 45.0].into_iter().enumerate() {
        let plan: Vec<(f64, f64)> = theta1.iter().map(|&t| (t, theta2)).collect();
        let counts = source::simulate_coincidences(&rho, &plan, dwell, cfg, derive_seed(args.seed, k as u64))?;
        let rows: Vec<Row> = theta1
            .iter()
            .map(|&t| Row {
                theta1_deg: t,
                coincidences: counts.get(t, theta2).expect("simulated above") as u64,
            })
            .collect();
        let path = dir.join(format!("fig2_theta2_{theta2}.csv"));
        write_rows(&path, &rows)?;
        outputs.push(path);
    }
    Ok(outputs)
}

/// Ou-Mandel scans of |HV⟩ + e^{iφ}|VH⟩ against beam-splitter position.
fn fig3(args: &FigureArgs, cfg: &SourceConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Row {
        x_um: f64,
        normalized_coincidence: f64,
    }
    let counts_far = args.counts.unwrap_or(1e4);
    let phis: Vec<(String, f64)> = match args.phi {
        Some(phi) => vec![(format!("{phi}"), phi)],
        None => vec![("0".into(), 0.0), ("pi_2".into(), PI / 2.0), ("pi".into(), PI)],
    };
    let xs: Vec<f64> = (-75..=75).map(|k| 2e-6 * k as f64).collect();
    let mut outputs = Vec::new();
    for (k, (label, phi)) in phis.iter().enumerate() {
        let scan = source::simulate_ou_mandel_scan(*phi, &xs, counts_far, cfg, derive_seed(args.seed, k as u64))?;
        let rows: Vec<Row> = scan
            .iter()
            .map(|&(x, c)| Row {
                x_um: x * 1e6,
                normalized_coincidence: c,
            })
            .collect();
        let path = dir.join(format!("fig3_phi_{label}.csv"));
        write_rows(&path, &rows)?;
        outputs.push(path);
    }
    Ok(outputs)
}

/// Fringe visibility and open-analyzer coincidence rate against iris radius.
fn fig4(args: &FigureArgs, cfg: &SourceConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Row {
        r_mm: f64,
        visibility: f64,
        rate_hz: f64,
    }
    let dwell = args.duration.unwrap_or(10.0);
    let rho = phi_minus();
    let plan = [
        (0.0, 0.0),
        (0.0, 90.0),
        (90.0, 0.0),
        (90.0, 90.0),
        (45.0, 45.0),
        (45.0, 135.0),
    ];
    let d = cfg.mask_diameter;
    let radii: Vec<f64> = (1..=20).map(|k| d * k as f64 / 20.0).collect();
    let rows = radii
        .par_iter()
        .enumerate()
        .map(|(k, &r)| {
            let cfg = SourceConfig {
                iris_r: r,
                ..cfg.clone()
            };
            let c = source::simulate_coincidences(&rho, &plan, dwell, &cfg, derive_seed(args.seed, k as u64))?;
            let at = |a: f64, b: f64| c.get(a, b).expect("simulated above");
            let open = at(0.0, 0.0) + at(0.0, 90.0) + at(90.0, 0.0) + at(90.0, 90.0);
            let (lo, hi) = (at(45.0, 45.0), at(45.0, 135.0));
            let visibility = if hi + lo > 0.0 {
                (hi - lo).abs() / (hi + lo)
            } else {
                0.0
            };
            Ok(Row {
                r_mm: r * 1e3,
                visibility,
                rate_hz: open / dwell,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = dir.join("fig4.csv");
    write_rows(&path, &rows)?;
    Ok(vec![path])
}

/// Reconstructed (S_L, T) of patchwork-synthesized states plus theory curves.
fn entropy_figure(args: &FigureArgs, cfg: &SourceConfig, dir: &Path, family: Family) -> Result<Vec<PathBuf>> {
    let flux = args.counts.unwrap_or(1e5);
    let ps: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let points = ps
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let partition = match family {
                Family::Werner => source::werner_partition(p)?,
                Family::Mems => source::mems_partition(p)?,
            };
            let rho = source::synthesize(&partition, PI)?.depolarized(cfg.visibility)?;
            let data = tomography::simulate_tomography(&rho, flux, derive_seed(args.seed, k as u64))?;
            let est = tomography::ml_reconstruct(&data)?;
            Ok(EntropyPoint::of(&est.rho, family, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let id = if family == Family::Werner { 8 } else { 11 };
    let points_path = dir.join(format!("fig{id}_points.csv"));
    if let Some(parent) = points_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    entanglement::write_entropy_csv(std::fs::File::create(&points_path)?, &points)?;

    #[derive(Serialize)]
    struct Theory {
        #[serde(rename = "S_L")]
        s_l: f64,
        #[serde(rename = "T_werner")]
        werner: f64,
        #[serde(rename = "T_mems")]
        mems: f64,
    }
    let theory = (0..=100)
        .map(|k| {
            let s_l = k as f64 / 100.0;
            Ok(Theory {
                s_l,
                werner: entanglement::tangle_curve(Family::Werner, s_l)?,
                mems: entanglement::tangle_curve(Family::Mems, s_l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let theory_path = dir.join(format!("fig{id}_theory.csv"));
    write_rows(&theory_path, &theory)?;
    Ok(vec![points_path, theory_path])
}

/// |S| with Poisson error from simulated CHSH runs on Werner states.
fn fig12(args: &FigureArgs, cfg: &SourceConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    #[derive(Serialize)]
    struct Row {
        p: f64,
        #[serde(rename = "abs_S")]
        abs_s: f64,
        #[serde(rename = "sigma_S")]
        sigma_s: f64,
    }
    let dwell = args.duration.unwrap_or(180.0 / 16.0);
    let plan = AnglePlan::standard();
    let settings = plan.joint_settings();
    let ps: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let rows = ps
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let rho = source::synthesize(&source::werner_partition(p)?, PI)?;
            let counts = source::simulate_coincidences(&rho, &settings, dwell, cfg, derive_seed(args.seed, k as u64))?;
            let est = bell::chsh_from_counts(&counts, &plan)?;
            Ok(Row {
                p,
                abs_s: est.abs_s,
                sigma_s: est.sigma_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = dir.join("fig12.csv");
    write_rows(&path, &rows)?;
    Ok(vec![path])
}
