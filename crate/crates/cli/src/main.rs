//! `ering`: command-line front end for the E-ring toolkit.
//!
//! Exit codes: 0 success, 1 domain error, 2 input-format error, 3 optimizer
//! did not converge.

mod config;
mod figure;
mod manifest;
mod state;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ering_core::bell::{self, AnglePlan, ChshSettings, CountsTable};
use ering_core::source;
use ering_core::tomography::{self, ReconstructionReport, TomoData};
use ering_core::{Error, Result};

use manifest::RunManifest;
use state::{StateFamily, StateParams};

#[derive(Parser)]
#[command(
    name = "ering",
    version,
    about = "Entangled-photon E-ring source: states, Bell tests, tomography and figure data"
)]
struct Cli {
    /// Source configuration file (TOML, SI units). Missing keys take defaults.
    #[arg(long, global = true, env = "ERING_CONFIG")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set visibility=0.904`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads for grid commands [default: available processors].
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a density matrix with its entanglement and nonlocality measures.
    State {
        family: StateFamily,
        #[command(flatten)]
        params: StateParams,
    },
    /// Maximal CHSH value of a state, or its value at given polarizer angles.
    Bell {
        family: StateFamily,
        #[command(flatten)]
        params: StateParams,
        /// Evaluate at linear polarizers θ1,θ1',θ2,θ2' in degrees instead of optimizing.
        #[arg(long, value_parser = parse_angles, value_name = "DEG,DEG,DEG,DEG", allow_hyphen_values = true)]
        angles: Option<[f64; 4]>,
    },
    /// Simulate or analyze coincidence counts of a CHSH run.
    #[command(subcommand)]
    Counts(CountsCommand),
    /// Mirror displacement (µm) to phase (rad), or the inverse with `--phi`.
    Phase {
        /// Mirror displacement Δd in µm.
        #[arg(
            long,
            allow_hyphen_values = true,
            conflicts_with = "phi",
            required_unless_present = "phi"
        )]
        delta_d_um: Option<f64>,
        /// Target phase in radians; prints the smallest Δd ≥ 0 reaching |φ|.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
    },
    /// Regenerate the data behind a figure as CSV files plus a manifest.
    Figure(figure::FigureArgs),
    /// Simulate tomography data or reconstruct a state from it.
    #[command(subcommand)]
    Tomo(TomoCommand),
}

#[derive(Args)]
struct AngleArgs {
    /// Polarizer angles θ1,θ1',θ2,θ2' in degrees [default: 0,45,22.5,67.5].
    #[arg(long, value_parser = parse_angles, value_name = "DEG,DEG,DEG,DEG", allow_hyphen_values = true)]
    angles: Option<[f64; 4]>,
}

fn parse_angles(s: &str) -> std::result::Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated angles, got {}", v.len()))
}

impl AngleArgs {
    fn plan(&self) -> AnglePlan {
        match &self.angles {
            Some(a) => AnglePlan {
                theta1: a[0],
                theta1p: a[1],
                theta2: a[2],
                theta2p: a[3],
            },
            None => AnglePlan::standard(),
        }
    }
}

#[derive(Subcommand)]
enum CountsCommand {
    /// Poisson counts at the 16 joint settings of a CHSH plan, written as CSV.
    Simulate {
        family: StateFamily,
        #[command(flatten)]
        params: StateParams,
        #[command(flatten)]
        angles: AngleArgs,
        /// Dwell time per joint setting, seconds.
        #[arg(long, default_value_t = 180.0 / 16.0)]
        duration: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// CHSH estimate with Poisson error from a counts CSV
    /// (`theta1_deg,theta2_deg,counts`, angles in degrees).
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        angles: AngleArgs,
        /// Dwell time per joint setting, seconds.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
    },
}

#[derive(Subcommand)]
enum TomoCommand {
    /// Counts for the 16 standard projector settings, written as CSV.
    Simulate {
        family: StateFamily,
        #[command(flatten)]
        params: StateParams,
        /// Flux N: setting k has mean count N·Tr(ρΠk).
        #[arg(long, default_value_t = 1e4)]
        counts: f64,
        /// Seed for the Poisson draws. Required unless `--exact`.
        #[arg(long, required_unless_present = "exact")]
        seed: Option<u64>,
        /// Write the noiseless expected counts instead of a Poisson draw.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood reconstruction; writes a JSON report.
    Reconstruct {
        /// Tomography CSV (`setting_index,proj1,proj2,counts`).
        #[arg(long)]
        input: PathBuf,
        /// State to compute the fidelity against, with the usual state flags.
        #[arg(long)]
        target: Option<StateFamily>,
        #[command(flatten)]
        params: StateParams,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OutOfRange { .. } | Error::InvalidState(_) | Error::Domain(_) => 1,
        Error::Format { .. } | Error::Io(_) => 2,
        Error::Convergence(_) => 3,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Domain("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Domain(e.to_string()))?;
    }
    let cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    let mut manifest = RunManifest::new(&cfg);

    match &cli.command {
        Command::State { family, params } => {
            let rho = state::build(*family, params)?;
            let mut out = state::summary(&rho)?;
            out["family"] = json!(family.to_string());
            print_with_manifest(out, manifest, start)
        }
        Command::Bell { family, params, angles } => {
            let rho = state::build(*family, params)?;
            let mut out = match angles {
                Some(a) => {
                    let r: Vec<f64> = a.iter().map(|d| d.to_radians()).collect();
                    let s = bell::chsh(&rho, &ChshSettings::linear(r[0], r[1], r[2], r[3]));
                    json!({ "angles_deg": a, "s": s, "abs_s": s.abs(), "violates": s.abs() > 2.0 })
                }
                None => {
                    let opt = bell::chsh_optimize(&rho)?;
                    json!({
                        "s": opt.s,
                        "abs_s": opt.abs_s(),
                        "violates": opt.abs_s() > 2.0,
                        "correlation_matrix_bound": bell::horodecki_max(&rho),
                        "settings_rad": opt.settings,
                    })
                }
            };
            out["family"] = json!(family.to_string());
            print_with_manifest(out, manifest, start)
        }
        Command::Counts(CountsCommand::Simulate {
            family,
            params,
            angles,
            duration,
            seed,
            out,
        }) => {
            let rho = state::build(*family, params)?;
            let plan = angles.plan();
            let table = source::simulate_coincidences(&rho, &plan.joint_settings(), *duration, &cfg, *seed)?;
            table.write_csv(create(out)?)?;
            manifest.seed = Some(*seed);
            manifest.outputs.push(out.display().to_string());
            finish_manifest(manifest, &manifest_path(out), start)
        }
        Command::Counts(CountsCommand::Analyze {
            input,
            angles,
            duration,
        }) => {
            let table = CountsTable::read_csv(open(input)?, *duration)?;
            let est = bell::chsh_from_counts(&table, &angles.plan())?;
            print_with_manifest(serde_json::to_value(est).expect("plain struct"), manifest, start)
        }
        Command::Phase { delta_d_um, phi } => {
            let d = match (delta_d_um, phi) {
                (Some(um), _) => um * 1e-6,
                (None, Some(target)) => source::displacement_for_phase(*target, &cfg)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let g = source::phase_from_displacement(d, &cfg)?;
            let out = json!({
                "delta_d_um": d * 1e6,
                "phi_rad": g.phi,
                "phi_mod_2pi_rad": g.phi_mod_2pi(),
                "lateral_offset_um": g.lateral_offset * 1e6,
                "visibility": source::displacement_visibility(d, &cfg),
            });
            print_with_manifest(out, manifest, start)
        }
        Command::Figure(args) => {
            manifest.seed = Some(args.seed);
            let outputs = figure::run(args, &cfg)?;
            manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
            let path = args.out_dir.join(format!("fig{}_manifest.json", args.id));
            finish_manifest(manifest, &path, start)
        }
        Command::Tomo(TomoCommand::Simulate {
            family,
            params,
            counts,
            seed,
            exact,
            out,
        }) => {
            let rho = state::build(*family, params)?;
            let data = if *exact {
                tomography::expected_tomography(&rho, *counts)?
            } else {
                let seed = seed.expect("clap requires --seed without --exact");
                manifest.seed = Some(seed);
                tomography::simulate_tomography(&rho, *counts, seed)?
            };
            data.write_csv(create(out)?)?;
            manifest.outputs.push(out.display().to_string());
            finish_manifest(manifest, &manifest_path(out), start)
        }
        Command::Tomo(TomoCommand::Reconstruct {
            input,
            target,
            params,
            out,
        }) => {
            let data = TomoData::read_csv(open(input)?)?;
            let est = tomography::ml_reconstruct(&data)?;
            let target_state = target.map(|f| state::build(f, params)).transpose()?;
            let label = target.map(|f| f.to_string());
            let report = ReconstructionReport::build(&data, &est, label.as_deref().zip(target_state.as_ref()))?;
            write_json(out, &serde_json::to_value(report).expect("plain struct"))?;
            manifest.outputs.push(out.display().to_string());
            finish_manifest(manifest, &manifest_path(out), start)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Format {
        line: None,
        msg: format!("cannot read {}: {e}", path.display()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Domain(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `out.csv` → `out.csv.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn finish_manifest(mut manifest: RunManifest, path: &Path, start: Instant) -> Result<()> {
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_json(path, &serde_json::to_value(&manifest).expect("plain struct"))?;
    eprintln!("wrote {}", manifest.outputs.join(", "));
    Ok(())
}

/// Commands that only print attach their manifest under `"manifest"`.
fn print_with_manifest(mut out: Value, mut manifest: RunManifest, start: Instant) -> Result<()> {
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    out["manifest"] = serde_json::to_value(&manifest).expect("plain struct");
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", serde_json::to_string_pretty(&out).expect("valid JSON")) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
