//! Flat `[section]` / `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rou_lab::estimators::EstimatorKind;
use rou_lab::model::{classify_basis, parse_basis, Assumption, DriftSpec, ModelParams, TrigBasisFunction};
use rou_lab::montecarlo::{ExperimentConfig, ExperimentKind};
use rou_lab::HurstParams;
use serde::Serialize;

use crate::CliError;

const KEYS: &[(&str, &[&str])] = &[
    ("model", &["H", "alpha", "basis", "mu"]),
    ("grid", &["points_per_unit", "n_points", "calibration"]),
    (
        "experiment",
        &[
            "horizons",
            "replicates",
            "burn_in",
            "estimator",
            "base_seed",
            "kind",
            "phi_extra",
            "noise_scale",
            "reference_samples",
        ],
    ),
];

pub const DEFAULT_POINTS_PER_UNIT: usize = 64;

/// Drop a `#` or `;` comment that starts a line or follows whitespace.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if (b == b'#' || b == b';') && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

/// Raw section -> key -> value map, with unknown sections and keys rejected.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>, CliError> {
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(CliError::Validation(format!("line {lineno}: unknown section [{name}]")));
            }
            out.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("line {lineno}: expected `key = value`")));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = &section else {
            return Err(CliError::Validation(format!("line {lineno}: `{key}` outside a section")));
        };
        let allowed = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(CliError::Validation(format!("line {lineno}: unknown key `{key}` in [{sec}]")));
        }
        let map = out.get_mut(sec).expect("section inserted");
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Validation(format!("line {lineno}: duplicate key `{key}` in [{sec}]")));
        }
    }
    Ok(out)
}

/// Typed settings; unset keys stay `None` until a command needs them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Settings {
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub alpha: Option<f64>,
    pub basis: Option<Vec<TrigBasisFunction>>,
    pub mu: Option<Vec<f64>>,
    pub points_per_unit: usize,
    pub n_points: Option<usize>,
    pub calibration: Option<PathBuf>,
    pub horizons: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub burn_in: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    pub base_seed: Option<u64>,
    pub kind: Option<ExperimentKind>,
    pub phi_extra: Option<TrigBasisFunction>,
    pub noise_scale: Option<f64>,
    pub reference_samples: Option<usize>,
}

fn value<T: std::str::FromStr>(sec: &str, key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| CliError::Validation(format!("[{sec}] {key} = {v:?}: {e}")))
}

fn list<T: std::str::FromStr>(sec: &str, key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| value(sec, key, s)).collect()
}

impl Settings {
    /// Read a config file; a relative `calibration` path is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        if let (Some(c), Some(dir)) = (&s.calibration, path.parent()) {
            if c.is_relative() {
                s.calibration = Some(dir.join(c));
            }
        }
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = parse_ini(text)?;
        let mut s = Settings { points_per_unit: DEFAULT_POINTS_PER_UNIT, ..Default::default() };
        for (sec, map) in &ini {
            for (key, v) in map {
                let (sec, key) = (sec.as_str(), key.as_str());
                match key {
                    "H" => s.h = Some(value(sec, key, v)?),
                    "alpha" => s.alpha = Some(value(sec, key, v)?),
                    "basis" => s.basis = Some(parse_basis(v).map_err(|e| CliError::Validation(format!("[model] basis: {e}")))?),
                    "mu" => s.mu = Some(list(sec, key, v)?),
                    "points_per_unit" => s.points_per_unit = value(sec, key, v)?,
                    "n_points" => s.n_points = Some(value(sec, key, v)?),
                    "calibration" => s.calibration = Some(PathBuf::from(v)),
                    "horizons" => s.horizons = Some(list(sec, key, v)?),
                    "replicates" => s.replicates = Some(value(sec, key, v)?),
                    "burn_in" => s.burn_in = Some(value(sec, key, v)?),
                    "estimator" => s.estimator = Some(value(sec, key, v)?),
                    "base_seed" => s.base_seed = Some(value(sec, key, v)?),
                    "kind" => s.kind = Some(value(sec, key, v)?),
                    "phi_extra" => s.phi_extra = Some(value(sec, key, v)?),
                    "noise_scale" => s.noise_scale = Some(value(sec, key, v)?),
                    "reference_samples" => s.reference_samples = Some(value(sec, key, v)?),
                    _ => unreachable!("keys checked by parse_ini"),
                }
            }
        }
        if s.points_per_unit == 0 {
            return Err(CliError::Validation("[grid] points_per_unit must be positive".into()));
        }
        Ok(s)
    }

    fn require<T: Clone>(v: &Option<T>, what: &str) -> Result<T, CliError> {
        v.clone().ok_or_else(|| CliError::Validation(format!("missing {what}")))
    }

    pub fn hurst(&self) -> Result<HurstParams, CliError> {
        Ok(HurstParams::new(Self::require(&self.h, "[model] H")?)?)
    }

    pub fn basis(&self) -> Result<Vec<TrigBasisFunction>, CliError> {
        Self::require(&self.basis, "[model] basis")
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        let drift = DriftSpec::new(self.basis()?, Self::require(&self.mu, "[model] mu")?)?;
        Ok(ModelParams::new(drift, Self::require(&self.alpha, "[model] alpha")?, self.hurst()?)?)
    }

    /// `alt_a1star` for symmetric bases, `alt_a1` otherwise.
    pub fn estimator_kind(&self) -> Result<EstimatorKind, CliError> {
        Ok(self.estimator.unwrap_or(match classify_basis(&self.basis()?) {
            Assumption::A1Star => EstimatorKind::AltA1Star,
            Assumption::A1 { .. } => EstimatorKind::AltA1,
        }))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig::new(self.model()?, self.estimator_kind()?);
        c.points_per_unit = self.points_per_unit;
        if let Some(h) = &self.horizons {
            c.horizons = h.clone();
        }
        if let Some(r) = self.replicates {
            c.replicates = r;
        }
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        if let Some(s) = self.base_seed {
            c.base_seed = s;
        }
        c.phi_extra = self.phi_extra;
        if let Some(s) = self.noise_scale {
            c.noise_scale = s;
        }
        if let Some(r) = self.reference_samples {
            c.reference_samples = r;
        }
        c.validate()?;
        Ok(c)
    }
}
