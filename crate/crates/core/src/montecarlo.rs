//! Replicated experiments: consistency, convergence rate, limit
//! distribution and ergodic averages.
//!
//! Replicate `r` at horizon `n` uses the Brownian seed
//! `derive_seed(base_seed, [n, r])`, so any subset of replicates can be rerun
//! on its own. Replicates run in parallel on the current rayon pool and are
//! aggregated in index order.

use crate::error::{Error, Result};
use crate::estimators::{
    alt_estimate_a1, alt_estimate_a1star, lse_estimate, time_integral, EstimateResult, EstimatorKind,
};
use crate::kernel::{calibrate_constants, HurstParams, KernelConstants};
use crate::lattice::generate_brownian;
use crate::model::{
    classify_basis, compute_limits, simulate_rou, Assumption, DriftSpec, ModelParams, SamplePath,
    TrigBasisFunction,
};
use crate::rng::derive_seed;
use crate::rosenblatt::RosenblattGenerator;
use crate::stats::{fit_slope, standardized_difference, Moments, SlopeEstimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Seed tag of the reference Rosenblatt sample.
const REFERENCE_TAG: u64 = 0x5245_4645_5245_4e43;

/// Burn-in used when none is configured, in units of `1/α`.
pub const DEFAULT_BURN_IN_RATE_TIMES: f64 = 40.0;

/// Experiment settings. Everything that influences the output is here, so a
/// serialized config reproduces a run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub horizons: Vec<usize>,
    pub replicates: usize,
    pub points_per_unit: usize,
    pub estimator_kind: EstimatorKind,
    pub base_seed: u64,
    /// Burn-in time; rounded up to whole periods. Zero starts at `X_0 = 0`.
    pub burn_in: f64,
    /// Extra basis function for the A1 estimator; `None` uses the classifier's suggestion.
    pub phi_extra: Option<TrigBasisFunction>,
    /// Multiplier on the Rosenblatt noise (0 gives noise-free runs).
    pub noise_scale: f64,
    /// Test function of the ergodic average.
    pub ergodic_phi: TrigBasisFunction,
    /// Size of the reference Rosenblatt sample in limit-distribution runs;
    /// 0 means the same as `replicates`.
    pub reference_samples: usize,
}

impl ExperimentConfig {
    /// Config with default horizons {50, 100, 200}, 500 replicates, 64 points
    /// per unit, burn-in `40/α` and seed 0.
    pub fn new(model: ModelParams, estimator_kind: EstimatorKind) -> Self {
        let burn_in = DEFAULT_BURN_IN_RATE_TIMES / model.alpha;
        Self {
            model,
            horizons: vec![50, 100, 200],
            replicates: 500,
            points_per_unit: 64,
            estimator_kind,
            base_seed: 0,
            burn_in,
            phi_extra: None,
            noise_scale: 1.0,
            ergodic_phi: TrigBasisFunction::Constant,
            reference_samples: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replicates < 2 {
            return bad(format!("replicates must be at least 2, got {}", self.replicates));
        }
        if self.horizons.is_empty() || self.horizons[0] == 0 {
            return bad("horizons must be positive and non-empty".into());
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return bad("horizons must be strictly increasing".into());
        }
        if self.points_per_unit < 16 {
            return bad(format!("points_per_unit must be at least 16, got {}", self.points_per_unit));
        }
        if !(self.burn_in >= 0.0) || !self.burn_in.is_finite() {
            return bad(format!("burn_in must be non-negative, got {}", self.burn_in));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return bad(format!("noise_scale must be non-negative, got {}", self.noise_scale));
        }
        let max_freq = self
            .model
            .drift
            .max_frequency()
            .max(self.phi_extra.map_or(0, |p| p.frequency()))
            .max(self.ergodic_phi.frequency());
        if 2 * max_freq as usize >= self.points_per_unit {
            return bad(format!("points_per_unit {} cannot resolve frequency {max_freq}", self.points_per_unit));
        }
        let class = classify_basis(self.model.drift.basis());
        match (self.estimator_kind, class) {
            (EstimatorKind::AltA1Star, Assumption::A1 { .. }) => {
                return bad("alt_a1star needs a symmetric basis (A1*)".into())
            }
            (EstimatorKind::AltA1, Assumption::A1Star) if self.phi_extra.is_none() => {
                return bad("alt_a1 needs an (A1) basis or an explicit phi_extra".into())
            }
            _ => {}
        }
        Ok(())
    }

    /// Burn-in in whole periods.
    pub fn burn_in_periods(&self) -> usize {
        self.burn_in.ceil() as usize
    }

    /// The A1 extra function actually used.
    pub fn resolved_phi_extra(&self) -> Option<TrigBasisFunction> {
        self.phi_extra.or(match classify_basis(self.model.drift.basis()) {
            Assumption::A1 { suggested_phi } => Some(suggested_phi),
            Assumption::A1Star => None,
        })
    }

    /// Replicate seed at horizon `n`.
    pub fn replicate_seed(&self, n: usize, replicate: usize) -> u64 {
        derive_seed(self.base_seed, &[n as u64, replicate as u64])
    }

    pub fn reference_count(&self) -> usize {
        if self.reference_samples == 0 {
            self.replicates
        } else {
            self.reference_samples
        }
    }

    /// Names of the estimated coordinates.
    pub fn coordinate_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.model.drift.basis().iter().map(|b| format!("mu[{b}]")).collect();
        v.push("alpha".into());
        v
    }
}

/// Simulates stationary-regime paths of one configuration.
pub struct PathSimulator {
    model: ModelParams,
    consts: KernelConstants,
    generator: RosenblattGenerator,
    burn_periods: usize,
    noise_scale: f64,
}

impl PathSimulator {
    /// Calibrate at the configured resolution and size the generator for the
    /// longest horizon.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let consts = calibrate_constants(&config.model.hurst, config.points_per_unit)?;
        Self::with_constants(config, consts)
    }

    pub fn with_constants(config: &ExperimentConfig, consts: KernelConstants) -> Result<Self> {
        let m = config.points_per_unit;
        consts.check_resolution(&config.model.hurst, 1.0 / m as f64)?;
        let burn_periods = config.burn_in_periods();
        let max_n = *config.horizons.last().ok_or_else(|| Error::InvalidConfig("no horizons".into()))?;
        let generator = RosenblattGenerator::new(config.model.hurst, consts, (burn_periods + max_n) * m)?;
        Ok(Self {
            model: config.model.clone(),
            consts,
            generator,
            burn_periods,
            noise_scale: config.noise_scale,
        })
    }

    pub fn consts(&self) -> &KernelConstants {
        &self.consts
    }

    /// Path on `[0, n]` after the burn-in, for the model or for `model`.
    pub fn simulate_with(&self, model: &ModelParams, n: usize, seed: u64) -> Result<SamplePath> {
        let m = self.consts.points_per_unit;
        let cells = (self.burn_periods + n) * m;
        let lattice = generate_brownian(cells + 1, self.consts.grid_delta, seed)?;
        let mut z = self.generator.generate(&lattice)?;
        if self.noise_scale != 1.0 {
            z = z.scaled(self.noise_scale);
        }
        let x = simulate_rou(model, &z, 0.0)?;
        Ok(x.tail_from(self.burn_periods * m))
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<SamplePath> {
        self.simulate_with(&self.model, n, seed)
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub outcome: std::result::Result<EstimateResult, Error>,
}

/// Bias and RMSE of one coordinate at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub count: usize,
    pub mean: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub rmse: f64,
    pub rmse_se: f64,
}

impl CoordinateSummary {
    fn of(errors: &[f64], truth: f64) -> Self {
        let m = Moments::of(errors);
        let r = errors.len() as f64;
        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let mse = sq.iter().sum::<f64>() / r;
        let sq_m = Moments::of(&sq);
        let rmse = mse.sqrt();
        Self {
            count: errors.len(),
            mean: truth + m.mean,
            bias: m.mean,
            bias_se: m.mean_se,
            rmse,
            rmse_se: if rmse > 0.0 { sq_m.mean_se / (2.0 * rmse) } else { 0.0 },
        }
    }
}

/// Aggregates at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonAggregate {
    pub horizon: usize,
    pub replicates: usize,
    pub used: usize,
    pub excluded: usize,
    /// Per coordinate, ordered as `coordinate_names`; empty for ergodicity runs.
    pub coordinates: Vec<CoordinateSummary>,
    /// Moments of the ergodic average (ergodicity runs only).
    pub statistic: Option<Moments>,
}

/// Sample versus reference moments of `n^{1-H}(ϑ̂ - ϑ)` for one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub coordinate: String,
    pub sample: Moments,
    /// Coefficient `c` such that the limit is `c · V` with `V` Rosenblatt;
    /// `None` when the marginal limit is not determined.
    pub reference_coefficient: Option<f64>,
    pub reference: Option<Moments>,
    pub mean_z: Option<f64>,
    pub variance_z: Option<f64>,
    pub skewness_sign_match: Option<bool>,
}

/// Kind of experiment a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Consistency,
    Rate,
    LimitDistribution,
    Ergodicity,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "consistency" => Ok(Self::Consistency),
            "rate" => Ok(Self::Rate),
            "limit-dist" | "limit-distribution" => Ok(Self::LimitDistribution),
            "ergodicity" => Ok(Self::Ergodicity),
            other => Err(Error::InvalidConfig(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Results of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub consts: KernelConstants,
    pub coordinate_names: Vec<String>,
    pub per_horizon: Vec<HorizonAggregate>,
    /// Slope of log RMSE against log n per coordinate (rate runs), or of the
    /// log variance of the ergodic average (ergodicity runs, single entry).
    pub rate_slope: Vec<Option<SlopeEstimate>>,
    pub moment_table: Vec<MomentComparison>,
    /// Moments of the reference Rosenblatt sample itself.
    pub reference_sample: Option<Moments>,
    pub excluded_counts: Vec<(usize, usize)>,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
    #[serde(skip)]
    pub statistics: Vec<(usize, usize, u64, f64)>,
}

impl ExperimentReport {
    /// Per-replicate CSV. Estimation runs use
    /// `replicate,seed,n,estimator,mu_hat_1..mu_hat_p,alpha_hat,gamma_n_inv,flag`,
    /// with excluded replicates flagged `excluded:<code>`; ergodicity runs
    /// use `replicate,seed,n,statistic`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.kind == ExperimentKind::Ergodicity {
            s.push_str("replicate,seed,n,statistic\n");
            for (r, n, seed, v) in &self.statistics {
                let _ = writeln!(s, "{r},{seed},{n},{v:.16e}");
            }
            return s;
        }
        let p = self.config.model.drift.p();
        s.push_str(&EstimateResult::csv_header(p));
        s.push('\n');
        for rec in &self.records {
            match &rec.outcome {
                Ok(e) => {
                    s.push_str(&e.to_csv_row(rec.replicate, rec.seed));
                    s.push('\n');
                }
                Err(err) => {
                    let _ = write!(s, "{},{},{},{}", rec.replicate, rec.seed, rec.n, self.config.estimator_kind);
                    for _ in 0..p + 2 {
                        s.push_str(",NaN");
                    }
                    let _ = writeln!(s, ",excluded:{}", err.code());
                }
            }
        }
        s
    }

    /// JSON summary (config echo, aggregates, slopes, moments, exclusions).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything needed to rerun an experiment: the config, the kernel
/// constants it ran with and checksums of the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub constants: KernelConstants,
    /// Output file name to hex SHA-256, filled in by the writer.
    #[serde(default)]
    pub outputs: std::collections::BTreeMap<String, String>,
    /// Hex SHA-256 of the calibration file the constants were read from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_sha256: Option<String>,
}

impl Manifest {
    pub fn new(report: &ExperimentReport) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: report.kind,
            config: report.config.clone(),
            constants: report.consts,
            outputs: Default::default(),
            calibration_sha256: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("manifest: {e}")))
    }

    /// Rerun with the recorded constants.
    pub fn rerun(&self) -> Result<ExperimentReport> {
        run_experiment(self.kind, &self.config, Some(self.constants))
    }
}

fn estimate(config: &ExperimentConfig, x: &SamplePath) -> Result<EstimateResult> {
    let basis = config.model.drift.basis();
    match config.estimator_kind {
        EstimatorKind::Lse => lse_estimate(x, basis),
        EstimatorKind::AltA1 => {
            let phi = config
                .resolved_phi_extra()
                .ok_or_else(|| Error::InvalidConfig("no extra basis function for alt_a1".into()))?;
            alt_estimate_a1(x, basis, phi)
        }
        EstimatorKind::AltA1Star => alt_estimate_a1star(x, basis, &config.model.hurst),
    }
}

fn run_horizon(config: &ExperimentConfig, sim: &PathSimulator, n: usize) -> Vec<ReplicateRecord> {
    (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = config.replicate_seed(n, r);
            let outcome = sim.simulate(n, seed).and_then(|x| estimate(config, &x));
            ReplicateRecord { replicate: r, seed, n, outcome }
        })
        .collect()
}

fn aggregate(config: &ExperimentConfig, n: usize, records: &[ReplicateRecord]) -> HorizonAggregate {
    let theta = config.model.theta();
    let ok: Vec<&EstimateResult> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let coordinates = theta
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let errs: Vec<f64> = ok.iter().map(|e| e.theta_hat[i] - t).collect();
            CoordinateSummary::of(&errs, *t)
        })
        .collect();
    HorizonAggregate {
        horizon: n,
        replicates: records.len(),
        used: ok.len(),
        excluded: records.len() - ok.len(),
        coordinates,
        statistic: None,
    }
}

fn empty_report(kind: ExperimentKind, config: &ExperimentConfig, consts: KernelConstants) -> ExperimentReport {
    ExperimentReport {
        kind,
        config: config.clone(),
        consts,
        coordinate_names: config.coordinate_names(),
        per_horizon: Vec::new(),
        rate_slope: Vec::new(),
        moment_table: Vec::new(),
        reference_sample: None,
        excluded_counts: Vec::new(),
        records: Vec::new(),
        statistics: Vec::new(),
    }
}

/// Bias and RMSE per coordinate at each horizon.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(ExperimentKind::Consistency, config, None)
}

/// Run `kind`, reusing `consts` when given instead of calibrating.
pub fn run_experiment(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    consts: Option<KernelConstants>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let consts = match consts {
        Some(c) => c,
        None => calibrate_constants(&config.model.hurst, config.points_per_unit)?,
    };
    match kind {
        ExperimentKind::Consistency => {
            let sim = PathSimulator::with_constants(config, consts)?;
            run_consistency_with(config, &sim, kind)
        }
        ExperimentKind::Rate => rate_impl(config, consts),
        ExperimentKind::LimitDistribution => limit_impl(config, consts),
        ExperimentKind::Ergodicity => ergodicity_impl(config, consts),
    }
}

fn run_consistency_with(
    config: &ExperimentConfig,
    sim: &PathSimulator,
    kind: ExperimentKind,
) -> Result<ExperimentReport> {
    let mut report = empty_report(kind, config, *sim.consts());
    for &n in &config.horizons {
        let records = run_horizon(config, sim, n);
        let agg = aggregate(config, n, &records);
        report.excluded_counts.push((n, agg.excluded));
        report.per_horizon.push(agg);
        report.records.extend(records);
    }
    Ok(report)
}

/// Consistency run plus the slope of log RMSE against log n per coordinate.
pub fn run_rate(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(ExperimentKind::Rate, config, None)
}

fn rate_impl(config: &ExperimentConfig, consts: KernelConstants) -> Result<ExperimentReport> {
    let h = &config.horizons;
    if h.len() < 3 || h[h.len() - 1] < 4 * h[0] {
        return Err(Error::InvalidConfig("rate runs need at least 3 horizons spanning a factor of 4".into()));
    }
    let sim = PathSimulator::with_constants(config, consts)?;
    let mut report = run_consistency_with(config, &sim, ExperimentKind::Rate)?;
    let x: Vec<f64> = report.per_horizon.iter().map(|a| (a.horizon as f64).ln()).collect();
    report.rate_slope = (0..report.coordinate_names.len())
        .map(|i| {
            let cs: Vec<&CoordinateSummary> = report.per_horizon.iter().map(|a| &a.coordinates[i]).collect();
            if cs.iter().any(|c| !(c.rmse > 0.0)) {
                return None;
            }
            let y: Vec<f64> = cs.iter().map(|c| c.rmse.ln()).collect();
            let se: Vec<f64> = cs.iter().map(|c| c.rmse_se / c.rmse).collect();
            Some(fit_slope(&x, &y, &se))
        })
        .collect();
    Ok(report)
}

/// Coefficients `c_i` with `n^{1-H}(ϑ̂_i - ϑ_i) → c_i V` in law, `V` a
/// standard Rosenblatt variable, where the marginal limit is of that form.
///
/// * A1*: `n^{1-H}(ᾱ^{(1)} - α) → -C_α G V` with `G = 2 B_H` (see
///   [`LimitLawSpec::g_factor`](crate::model::LimitLawSpec)); the drift
///   coordinates mix `G_∞` with `Z_1` unless `∫φ_i = 0` or `Λ_i = 0`.
/// * A1: `n^{1-H}(ᾱ - α) → -(∫φ_{p+1} / ⟨φ_{p+1}, h̃⟩) V` and
///   `n^{1-H}(μ̄_i - μ_i) → (∫φ_i - Λ_i ∫φ_{p+1} / ⟨φ_{p+1}, h̃⟩) V`.
/// * LSE: `Q R` with `R = (∫φ_1, ..., ∫φ_p, -∫h̃) V`.
pub fn limit_coefficients(config: &ExperimentConfig) -> Vec<Option<f64>> {
    let limits = compute_limits(&config.model);
    let law = &limits.limit_law;
    let p = config.model.drift.p();
    match config.estimator_kind {
        EstimatorKind::AltA1Star => {
            let g = -law.c_alpha * law.g_factor;
            let mut v: Vec<Option<f64>> = (0..p)
                .map(|i| {
                    let (int, lam) = (law.integrals_phi[i], law.lambda[i]);
                    if int == 0.0 {
                        Some(g * lam)
                    } else if lam == 0.0 {
                        Some(int)
                    } else {
                        None
                    }
                })
                .collect();
            v.push(Some(g));
            v
        }
        EstimatorKind::AltA1 => {
            let Some(phi) = config.resolved_phi_extra() else {
                return vec![None; p + 1];
            };
            let coef = crate::model::h_tilde_coefficients(&config.model);
            let ip = coef.get(&phi).copied().unwrap_or(0.0);
            let ratio = if ip != 0.0 { phi.integral() / ip } else { f64::NAN };
            if !ratio.is_finite() {
                return vec![None; p + 1];
            }
            let mut v: Vec<Option<f64>> =
                (0..p).map(|i| Some(law.integrals_phi[i] - law.lambda[i] * ratio)).collect();
            v.push(Some(-ratio));
            v
        }
        EstimatorKind::Lse => {
            let mut r = law.integrals_phi.clone();
            r.push(-law.h_tilde_integral);
            (0..=p)
                .map(|i| Some((0..=p).map(|j| limits.q[(i, j)] * r[j]).sum()))
                .collect()
        }
    }
}

/// `n^{1-H}(ϑ̂ - ϑ)` at the last horizon against `c_i V` built from an
/// independent sample of simulated Rosenblatt variables.
pub fn run_limit_distribution(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(ExperimentKind::LimitDistribution, config, None)
}

fn limit_impl(config: &ExperimentConfig, consts: KernelConstants) -> Result<ExperimentReport> {
    let n = *config.horizons.last().expect("validated");
    let mut single = config.clone();
    single.horizons = vec![n];
    let sim = PathSimulator::with_constants(&single, consts)?;
    let mut report = run_consistency_with(&single, &sim, ExperimentKind::LimitDistribution)?;
    report.config = config.clone();

    let hurst = config.model.hurst;
    let reference = simulate_rosenblatt_variable(
        &hurst,
        sim.consts(),
        config.reference_count(),
        derive_seed(config.base_seed, &[REFERENCE_TAG]),
    )?;
    let ref_moments = Moments::of(&reference);
    report.reference_sample = Some(ref_moments);

    let scale = (n as f64).powf(1.0 - hurst.h());
    let theta = config.model.theta();
    let ok: Vec<&EstimateResult> = report.records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let coefs = limit_coefficients(config);
    report.moment_table = report
        .coordinate_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let s: Vec<f64> = ok.iter().map(|e| scale * (e.theta_hat[i] - theta[i])).collect();
            let sample = Moments::of(&s);
            let reference = coefs[i].map(|c| ref_moments.scaled(c));
            MomentComparison {
                coordinate: name.clone(),
                sample,
                reference_coefficient: coefs[i],
                mean_z: reference.map(|r| standardized_difference(sample.mean, sample.mean_se, r.mean, r.mean_se)),
                variance_z: reference
                    .map(|r| standardized_difference(sample.variance, sample.variance_se, r.variance, r.variance_se)),
                skewness_sign_match: reference
                    .map(|r| r.skewness != 0.0 && sample.skewness.signum() == r.skewness.signum()),
                reference,
            }
        })
        .collect();
    Ok(report)
}

/// `Z_1` from `n_samples` independent lattices of one unit of time.
pub fn simulate_rosenblatt_variable(
    hurst: &HurstParams,
    consts: &KernelConstants,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let m = consts.points_per_unit;
    let generator = RosenblattGenerator::new(*hurst, *consts, m)?;
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let lattice = generate_brownian(m + 1, consts.grid_delta, derive_seed(seed, &[i as u64]))?;
            Ok(*generator.generate(&lattice)?.values.last().expect("non-empty path"))
        })
        .collect()
}

/// Ergodic average `(1/n) ∫_0^n φ Ỹ dt` of the stationary noise part
/// (`L ≡ 0`) at each horizon, with the slope of its log variance against log n.
pub fn run_ergodicity_check(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(ExperimentKind::Ergodicity, config, None)
}

fn ergodicity_impl(config: &ExperimentConfig, consts: KernelConstants) -> Result<ExperimentReport> {
    if config.burn_in <= 0.0 {
        return Err(Error::InvalidConfig("ergodicity runs need a positive burn-in".into()));
    }
    let sim = PathSimulator::with_constants(config, consts)?;
    let p = config.model.drift.p();
    let zero = ModelParams::new(
        DriftSpec::new(config.model.drift.basis().to_vec(), vec![0.0; p])?,
        config.model.alpha,
        config.model.hurst,
    )?;
    let phi = config.ergodic_phi;
    let mut report = empty_report(ExperimentKind::Ergodicity, config, *sim.consts());
    for &n in &config.horizons {
        let stats: Vec<(usize, usize, u64, f64)> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = config.replicate_seed(n, r);
                let y = sim.simulate_with(&zero, n, seed)?;
                let g = phi.sample(y.delta, y.values.len());
                Ok((r, n, seed, time_integral(&g, &y)? / n as f64))
            })
            .collect::<Result<_>>()?;
        let values: Vec<f64> = stats.iter().map(|s| s.3).collect();
        report.per_horizon.push(HorizonAggregate {
            horizon: n,
            replicates: values.len(),
            used: values.len(),
            excluded: 0,
            coordinates: Vec::new(),
            statistic: Some(Moments::of(&values)),
        });
        report.excluded_counts.push((n, 0));
        report.statistics.extend(stats);
    }
    if report.per_horizon.len() >= 2 {
        let x: Vec<f64> = report.per_horizon.iter().map(|a| (a.horizon as f64).ln()).collect();
        let m: Vec<Moments> = report.per_horizon.iter().map(|a| a.statistic.expect("set above")).collect();
        let y: Vec<f64> = m.iter().map(|s| s.variance.ln()).collect();
        let se: Vec<f64> = m.iter().map(|s| s.variance_se / s.variance).collect();
        report.rate_slope = vec![Some(fit_slope(&x, &y, &se))];
    }
    Ok(report)
}
