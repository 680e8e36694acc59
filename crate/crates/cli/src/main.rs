//! `rou-lab`: simulate Rosenblatt-driven Ornstein-Uhlenbeck paths, estimate
//! their periodic drift and run Monte Carlo experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rou_lab::estimators::{alt_estimate_a1, alt_estimate_a1star, lse_estimate, EstimateResult, EstimatorKind};
use rou_lab::model::{classify_basis, parse_basis, simulate_rou, Assumption, SamplePath};
use rou_lab::montecarlo::{run_experiment, ExperimentKind, Manifest};
use rou_lab::{calibrate_constants, generate_brownian, HurstParams, KernelConstants, RosenblattGenerator};
use serde::{Deserialize, Serialize};

use config::Settings;
use output::{sha256_hex, Outputs};

/// Failure classes, mapped onto exit codes 1 (validation) and 2 (runtime).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "invalid input: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<rou_lab::Error> for CliError {
    fn from(e: rou_lab::Error) -> Self {
        use rou_lab::Error::*;
        match e {
            CalibrationFailure(_) | DegeneratePath(_) | Singular | NearZeroDenominator { .. } => {
                Self::Runtime(e.to_string())
            }
            _ => Self::Validation(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rou-lab", version, about = "Rosenblatt Ornstein-Uhlenbeck simulation and drift estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file with [model], [grid] and [experiment] sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Seed, overriding [experiment] base_seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true, value_name = "N", env = "ROU_LAB_WORKERS")]
    workers: Option<NonZeroUsize>,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Calibrate kernel constants and write constants.json.
    Calibrate,
    /// Simulate a Rosenblatt path and write rosenblatt.csv.
    SimulateRosenblatt,
    /// Simulate a Rosenblatt OU path from 0 and write rou.csv.
    SimulateRou,
    /// Estimate the drift from a `t,x` CSV path and write estimate.csv.
    Estimate {
        /// Path file with header `t,x` on a uniform grid starting at 0.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Run a Monte Carlo experiment and write montecarlo.csv and summary.json.
    Montecarlo {
        /// Rerun from a manifest instead of a config.
        #[arg(long, value_name = "PATH", conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Print the identifiability assumption of a basis.
    Classify {
        /// Basis list such as `sin:1,cos:1`, instead of [model] basis.
        #[arg(long)]
        basis: Option<String>,
    },
}

const MANIFEST: &str = "manifest.json";

/// Manifest for the single-run commands.
#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a Settings,
    seed: Option<u64>,
    constants: Option<KernelConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_sha256: Option<String>,
    outputs: BTreeMap<String, String>,
}

struct Run {
    cli: Cli,
    settings: Settings,
}

impl Run {
    fn say(&self, msg: impl std::fmt::Display) {
        if !self.cli.quiet {
            println!("{msg}");
        }
    }

    fn seed(&self) -> u64 {
        self.cli.seed.or(self.settings.base_seed).unwrap_or(0)
    }

    /// Constants from the calibration file if one is configured, else freshly
    /// calibrated; the file hash is returned alongside.
    fn constants(&self, hurst: &HurstParams) -> Result<(KernelConstants, Option<String>), CliError> {
        let ppu = self.settings.points_per_unit;
        match &self.settings.calibration {
            Some(path) => {
                let bytes = std::fs::read(path)
                    .map_err(|e| CliError::Validation(format!("cannot read calibration {}: {e}", path.display())))?;
                let consts: KernelConstants = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::Validation(format!("calibration {}: {e}", path.display())))?;
                consts.check_resolution(hurst, 1.0 / ppu as f64)?;
                Ok((consts, Some(sha256_hex(&bytes))))
            }
            None => {
                log::info!("calibrating H = {} at {ppu} points per unit", hurst.h());
                Ok((calibrate_constants(hurst, ppu)?, None))
            }
        }
    }

    fn n_points(&self) -> Result<usize, CliError> {
        match self.settings.n_points {
            Some(n) if n >= 2 => Ok(n),
            Some(n) => Err(CliError::Validation(format!("[grid] n_points must be at least 2, got {n}"))),
            None => Err(CliError::Validation("missing [grid] n_points".into())),
        }
    }

    fn single_run(
        &self,
        command: &'static str,
        files: Vec<(&str, String)>,
        seed: Option<u64>,
        constants: Option<KernelConstants>,
        calibration_sha256: Option<String>,
    ) -> Result<(), CliError> {
        let mut out = Outputs::new(&self.cli.out, self.cli.force);
        let outputs = files.into_iter().map(|(name, body)| (name.to_string(), out.add(name, body))).collect();
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: &self.settings,
            seed,
            constants,
            calibration_sha256,
            outputs,
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        out.add(MANIFEST, json);
        for p in out.commit()? {
            self.say(format!("wrote {}", p.display()));
        }
        Ok(())
    }

    fn calibrate(&self) -> Result<(), CliError> {
        let hurst = self.settings.hurst()?;
        let consts = calibrate_constants(&hurst, self.settings.points_per_unit)?;
        let json = serde_json::to_string_pretty(&consts).expect("constants serialize") + "\n";
        self.say(format!("c_Hprime = {:.16e}\nd_H = {:.16e}", consts.c_hprime, consts.d_h));
        self.single_run("calibrate", vec![("constants.json", json)], None, Some(consts), None)
    }

    fn rosenblatt(&self, hurst: &HurstParams, consts: &KernelConstants, seed: u64) -> Result<rou_lab::RosenblattPath, CliError> {
        let n = self.n_points()?;
        let lattice = generate_brownian(n, consts.grid_delta, seed)?;
        Ok(RosenblattGenerator::new(*hurst, *consts, n - 1)?.generate(&lattice)?)
    }

    fn simulate_rosenblatt(&self) -> Result<(), CliError> {
        let hurst = self.settings.hurst()?;
        self.n_points()?;
        let (consts, cal) = self.constants(&hurst)?;
        let seed = self.seed();
        let path = self.rosenblatt(&hurst, &consts, seed)?;
        self.single_run("simulate-rosenblatt", vec![("rosenblatt.csv", path.to_csv())], Some(seed), Some(consts), cal)
    }

    fn simulate_rou(&self) -> Result<(), CliError> {
        let params = self.settings.model()?;
        self.n_points()?;
        let (consts, cal) = self.constants(&params.hurst)?;
        let seed = self.seed();
        let noise = self.rosenblatt(&params.hurst, &consts, seed)?;
        let x = simulate_rou(&params, &noise, 0.0)?;
        self.single_run("simulate-rou", vec![("rou.csv", x.to_csv())], Some(seed), Some(consts), cal)
    }

    fn estimate(&self, input: &Path) -> Result<(), CliError> {
        let basis = self.settings.basis()?;
        let kind = self.settings.estimator_kind()?;
        let x = read_path(input)?;
        let est = match kind {
            EstimatorKind::Lse => lse_estimate(&x, &basis),
            EstimatorKind::AltA1 => {
                let phi = match (self.settings.phi_extra, classify_basis(&basis)) {
                    (Some(p), _) | (None, Assumption::A1 { suggested_phi: p }) => p,
                    (None, Assumption::A1Star) => {
                        return Err(CliError::Validation("alt_a1 on an (A1*) basis needs [experiment] phi_extra".into()))
                    }
                };
                alt_estimate_a1(&x, &basis, phi)
            }
            EstimatorKind::AltA1Star => alt_estimate_a1star(&x, &basis, &self.settings.hurst()?),
        }
        .map_err(|e| match e {
            rou_lab::Error::InvalidArgument(_) | rou_lab::Error::LengthMismatch { .. } => CliError::from(e),
            e => CliError::Runtime(e.to_string()),
        })?;
        let csv = format!("{}\n{}\n", EstimateResult::csv_header(basis.len()), est.to_csv_row(0, 0));
        self.say(csv.trim_end());
        self.single_run("estimate", vec![("estimate.csv", csv)], None, None, None)
    }

    fn montecarlo(&self, manifest: Option<&Path>) -> Result<(), CliError> {
        let (kind, mut config, consts, cal) = match manifest {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("cannot read manifest {}: {e}", p.display())))?;
                let m = Manifest::from_json(&text)?;
                (m.kind, m.config, Some(m.constants), m.calibration_sha256)
            }
            None => {
                let config = self.settings.experiment()?;
                let (consts, cal) = match self.settings.calibration {
                    Some(_) => {
                        let (c, h) = self.constants(&config.model.hurst)?;
                        (Some(c), h)
                    }
                    None => (None, None),
                };
                (self.settings.kind.unwrap_or(ExperimentKind::Consistency), config, consts, cal)
            }
        };
        if let Some(s) = self.cli.seed {
            config.base_seed = s;
        }
        log::info!("{kind:?} experiment: horizons {:?}, {} replicates", config.horizons, config.replicates);
        let report = run_experiment(kind, &config, consts)?;
        for (n, ex) in &report.excluded_counts {
            if *ex > 0 {
                log::warn!("n = {n}: {ex} replicates excluded");
            }
        }
        let mut out = Outputs::new(&self.cli.out, self.cli.force);
        let mut m = Manifest::new(&report);
        m.calibration_sha256 = cal;
        m.outputs.insert("montecarlo.csv".into(), out.add("montecarlo.csv", report.to_csv()));
        m.outputs.insert("summary.json".into(), out.add("summary.json", report.to_json() + "\n"));
        out.add(MANIFEST, m.to_json() + "\n");
        for p in out.commit()? {
            self.say(format!("wrote {}", p.display()));
        }
        Ok(())
    }

    fn classify(&self, basis: Option<&str>) -> Result<(), CliError> {
        let basis = match basis {
            Some(b) => parse_basis(b)?,
            None => self.settings.basis()?,
        };
        if basis.is_empty() {
            return Err(CliError::Validation("empty basis".into()));
        }
        println!("{}", classify_basis(&basis));
        Ok(())
    }

    fn dispatch(&self) -> Result<(), CliError> {
        match &self.cli.command {
            Command::Calibrate => self.calibrate(),
            Command::SimulateRosenblatt => self.simulate_rosenblatt(),
            Command::SimulateRou => self.simulate_rou(),
            Command::Estimate { input } => self.estimate(input),
            Command::Montecarlo { manifest } => self.montecarlo(manifest.as_deref()),
            Command::Classify { basis } => self.classify(basis.as_deref()),
        }
    }
}

#[derive(Deserialize)]
struct PathRow {
    t: f64,
    x: f64,
}

/// Read a `t,x` CSV on a uniform grid starting at 0.
fn read_path(path: &Path) -> Result<SamplePath, CliError> {
    let bad = |m: String| CliError::Validation(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let rows: Vec<PathRow> = reader.deserialize().collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))?;
    if rows.len() < 2 {
        return Err(bad("a path needs at least two rows".into()));
    }
    let delta = rows[1].t - rows[0].t;
    if rows[0].t != 0.0 || !(delta > 0.0) {
        return Err(bad("times must start at 0 and increase".into()));
    }
    for (k, r) in rows.iter().enumerate() {
        if (r.t - k as f64 * delta).abs() > 1e-9 * (1.0 + r.t.abs()) {
            return Err(bad(format!("row {}: time grid is not uniform", k + 1)));
        }
        if !r.x.is_finite() {
            return Err(bad(format!("row {}: non-finite value", k + 1)));
        }
    }
    Ok(SamplePath::new(delta, rows.into_iter().map(|r| r.x).collect())?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let settings = match &cli.config {
        Some(p) => Settings::load(p),
        None => Ok(Settings { points_per_unit: config::DEFAULT_POINTS_PER_UNIT, ..Default::default() }),
    };
    let result = settings.and_then(|settings| {
        let run = Run { cli, settings };
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(w) = run.cli.workers {
            pool = pool.num_threads(w.get());
        }
        let pool = pool.build().map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
        pool.install(|| run.dispatch())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rou-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
