//! Periodic drift, the Rosenblatt Ornstein-Uhlenbeck SDE
//! `dX_t = (L(t) - α X_t) dt + dZ_t`, the stationary mean `h̃`, and the
//! deterministic limits of the least-squares statistics.

use crate::error::{Error, Result};
use crate::kernel::HurstParams;
use crate::rosenblatt::RosenblattPath;
use crate::special::gamma;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

/// Orthonormal trigonometric basis element of `L²([0, 1])`:
/// `1`, `√2 sin(2πkt)` or `√2 cos(2πkt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TrigBasisFunction {
    Constant,
    Sine(u32),
    Cosine(u32),
}

impl TrigBasisFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Sine(k) => SQRT_2 * (TAU * (k as f64 * t).fract()).sin(),
            Self::Cosine(k) => SQRT_2 * (TAU * (k as f64 * t).fract()).cos(),
        }
    }

    /// Cycles per unit time; 0 for the constant.
    pub fn frequency(&self) -> u32 {
        match *self {
            Self::Constant => 0,
            Self::Sine(k) | Self::Cosine(k) => k,
        }
    }

    /// `∫_0^1 φ(t) dt`.
    pub fn integral(&self) -> f64 {
        match self {
            Self::Constant => 1.0,
            _ => 0.0,
        }
    }

    /// The sine/cosine of the same frequency; `None` for the constant.
    pub fn counterpart(&self) -> Option<Self> {
        match *self {
            Self::Constant => None,
            Self::Sine(k) => Some(Self::Cosine(k)),
            Self::Cosine(k) => Some(Self::Sine(k)),
        }
    }

    /// Values at `t_k = k δ`, `k = 0..n`.
    pub fn sample(&self, delta: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 * delta)).collect()
    }
}

impl fmt::Display for TrigBasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => write!(f, "const"),
            Self::Sine(k) => write!(f, "sin:{k}"),
            Self::Cosine(k) => write!(f, "cos:{k}"),
        }
    }
}

impl FromStr for TrigBasisFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "const" {
            return Ok(Self::Constant);
        }
        let bad = || Error::UnsupportedBasis(s.to_string());
        let (kind, freq) = s.split_once(':').ok_or_else(bad)?;
        let k: u32 = freq.trim().parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match kind.trim() {
            "sin" => Ok(Self::Sine(k)),
            "cos" => Ok(Self::Cosine(k)),
            _ => Err(bad()),
        }
    }
}

impl From<TrigBasisFunction> for String {
    fn from(b: TrigBasisFunction) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for TrigBasisFunction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Parse a comma-separated basis list such as `const,sin:1,cos:1`.
pub fn parse_basis(s: &str) -> Result<Vec<TrigBasisFunction>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(str::parse).collect()
}

/// Periodic mean `L(t) = Σ μ_i φ_i(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    basis: Vec<TrigBasisFunction>,
    mu: Vec<f64>,
}

impl DriftSpec {
    pub fn new(basis: Vec<TrigBasisFunction>, mu: Vec<f64>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidArgument("basis must not be empty".into()));
        }
        if basis.len() != mu.len() {
            return Err(Error::LengthMismatch { expected: basis.len(), actual: mu.len() });
        }
        check_distinct(&basis)?;
        if let Some(m) = mu.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {m}")));
        }
        Ok(Self { basis, mu })
    }

    pub fn basis(&self) -> &[TrigBasisFunction] {
        &self.basis
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn p(&self) -> usize {
        self.basis.len()
    }

    pub fn max_frequency(&self) -> u32 {
        self.basis.iter().map(|b| b.frequency()).max().unwrap_or(0)
    }
}

pub(crate) fn check_distinct(basis: &[TrigBasisFunction]) -> Result<()> {
    for (i, b) in basis.iter().enumerate() {
        if basis[..i].contains(b) {
            return Err(Error::InvalidArgument(format!("basis element {b} repeated")));
        }
    }
    Ok(())
}

/// `ϑ = (μ_1, ..., μ_p, α)` together with the Hurst index of the noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub drift: DriftSpec,
    pub alpha: f64,
    pub hurst: HurstParams,
}

impl ModelParams {
    pub fn new(drift: DriftSpec, alpha: f64, hurst: HurstParams) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { drift, alpha, hurst })
    }

    /// `(μ_1, ..., μ_p, α)`.
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.drift.mu.clone();
        t.push(self.alpha);
        t
    }
}

/// `L(t)`.
pub fn eval_l(spec: &DriftSpec, t: f64) -> f64 {
    spec.basis.iter().zip(&spec.mu).map(|(b, m)| m * b.eval(t)).sum()
}

/// Coefficients of `h̃` in the trigonometric basis. `h̃` lies in the span of
/// the drift basis and its sine/cosine counterparts.
pub fn h_tilde_coefficients(params: &ModelParams) -> BTreeMap<TrigBasisFunction, f64> {
    let a = params.alpha;
    let mut out = BTreeMap::new();
    for (b, &m) in params.drift.basis.iter().zip(&params.drift.mu) {
        match *b {
            TrigBasisFunction::Constant => *out.entry(*b).or_insert(0.0) += m / a,
            TrigBasisFunction::Sine(k) | TrigBasisFunction::Cosine(k) => {
                let w = TAU * k as f64;
                let den = w * w + a * a;
                let (s, c) = if matches!(b, TrigBasisFunction::Sine(_)) {
                    (a / den, -w / den)
                } else {
                    (w / den, a / den)
                };
                *out.entry(TrigBasisFunction::Sine(k)).or_insert(0.0) += m * s;
                *out.entry(TrigBasisFunction::Cosine(k)).or_insert(0.0) += m * c;
            }
        }
    }
    out
}

/// Stationary mean `h̃(t) = e^{-αt} ∫_{-∞}^t e^{αs} L(s) ds`.
pub fn eval_h_tilde(params: &ModelParams, t: f64) -> f64 {
    h_tilde_coefficients(params).iter().map(|(b, c)| c * b.eval(t)).sum()
}

/// Which identifiability assumption a trigonometric basis satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    /// `h̃` lies in the span of the basis.
    A1Star,
    /// Some `φ_{p+1}` orthogonal to the basis is not orthogonal to `h̃`.
    A1 { suggested_phi: TrigBasisFunction },
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::A1Star => write!(f, "A1*"),
            Self::A1 { suggested_phi } => write!(f, "A1, suggested phi: {suggested_phi}"),
        }
    }
}

/// A1* iff every sine in the basis has its cosine and vice versa; otherwise
/// A1 with the missing counterpart of lowest frequency.
pub fn classify_assumption(spec: &DriftSpec) -> Assumption {
    classify_basis(&spec.basis)
}

pub fn classify_basis(basis: &[TrigBasisFunction]) -> Assumption {
    let missing = basis
        .iter()
        .filter_map(|b| b.counterpart())
        .filter(|c| !basis.contains(c))
        .min_by_key(|c| (c.frequency(), matches!(c, TrigBasisFunction::Sine(_))));
    match missing {
        None => Assumption::A1Star,
        Some(phi) => Assumption::A1 { suggested_phi: phi },
    }
}

/// An observed path on a uniform grid `t_k = k δ` starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub delta: f64,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn new(delta: f64, values: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two points".into()));
        }
        Ok(Self { delta, values })
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.delta
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.delta).collect()
    }

    /// The path from grid index `start` on, with time re-based to 0.
    pub fn tail_from(&self, start: usize) -> Self {
        Self { delta: self.delta, values: self.values[start..].to_vec() }
    }

    /// CSV with header `t,x`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,x\n");
        for (k, x) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{:.16e}", k as f64 * self.delta, x);
        }
        s
    }
}

/// Euler scheme `X_{k+1} = X_k + (L(t_k) - α X_k) δ + (Z_{t_{k+1}} - Z_{t_k})`.
pub fn simulate_rou(params: &ModelParams, noise: &RosenblattPath, x0: f64) -> Result<SamplePath> {
    let delta = noise.delta();
    simulate_rou_increments(params, delta, noise.values.windows(2).map(|z| z[1] - z[0]), x0)
}

/// Euler scheme driven by arbitrary noise increments on step `delta`.
pub fn simulate_rou_increments<I>(params: &ModelParams, delta: f64, increments: I, x0: f64) -> Result<SamplePath>
where
    I: IntoIterator<Item = f64>,
{
    if params.alpha * delta >= 1.0 {
        log::warn!("Euler step unstable: alpha * delta = {} >= 1", params.alpha * delta);
    }
    let drift = &params.drift;
    let mut values = vec![x0];
    let mut x = x0;
    for (k, dz) in increments.into_iter().enumerate() {
        let t = k as f64 * delta;
        x += (eval_l(drift, t) - params.alpha * x) * delta + dz;
        values.push(x);
    }
    SamplePath::new(delta, values)
}

/// `α^{-2H} H Γ(2H)`, the variance of the stationary noise part.
pub fn stationary_variance(alpha: f64, hurst: &HurstParams) -> f64 {
    let h = hurst.h();
    alpha.powf(-2.0 * h) * h * gamma(2.0 * h)
}

/// Constants entering the limit laws of the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawSpec {
    #[serde(rename = "C_alpha")]
    pub c_alpha: f64,
    #[serde(rename = "B_H")]
    pub b_h: f64,
    /// `G` with `n^{1-H} (1/n) ∫_0^n (Y_t² - E Y_t²) dt → α^{-H-1} G V`,
    /// `V` standard Rosenblatt. The second-chaos projection of `Y²` gives
    /// `G = 4 d_H H'(2H'-1) Γ(H) = 2 B_H`.
    pub g_factor: f64,
    pub integrals_phi: Vec<f64>,
    pub h_tilde_integral: f64,
    pub lambda: Vec<f64>,
    pub gamma: f64,
}

/// Almost-sure limits of the least-squares statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Limits {
    pub lambda: Vec<f64>,
    pub gamma: f64,
    pub gamma_inv: f64,
    pub q: DMatrix<f64>,
    pub limit_law: LimitLawSpec,
}

/// `Λ_i = ⟨φ_i, h̃⟩`, `γ^{-1} = ‖h̃‖² + α^{-2H} H Γ(2H) - Σ Λ_i²` and the
/// bordered matrix `Q = [Id + γΛΛᵀ, γΛ; γΛᵀ, γ]`, the almost-sure limit of
/// `n Q_n^{-1}`.
pub fn compute_limits(params: &ModelParams) -> Limits {
    let coef = h_tilde_coefficients(params);
    let basis = params.drift.basis();
    let lambda: Vec<f64> = basis.iter().map(|b| coef.get(b).copied().unwrap_or(0.0)).collect();
    let norm_sq: f64 = coef.values().map(|c| c * c).sum();
    let proj_sq: f64 = lambda.iter().map(|l| l * l).sum();
    let gamma_inv = (norm_sq - proj_sq).max(0.0) + stationary_variance(params.alpha, &params.hurst);
    assert!(gamma_inv > 0.0, "gamma^-1 must be positive");
    let g = 1.0 / gamma_inv;
    let p = lambda.len();
    let q = DMatrix::from_fn(p + 1, p + 1, |i, j| match (i < p, j < p) {
        (true, true) => (i == j) as u8 as f64 + g * (lambda[i] * lambda[j]),
        (true, false) => g * lambda[i],
        (false, true) => g * lambda[j],
        (false, false) => g,
    });
    let h = params.hurst.h();
    let c_alpha = params.alpha.powf(h) / (2.0 * h * h * gamma(2.0 * h));
    let b_h = (2.0 * h - 1.0) * gamma(h + 1.0) / (0.5 * h * (2.0 * h - 1.0)).sqrt();
    let limit_law = LimitLawSpec {
        c_alpha,
        b_h,
        g_factor: 4.0 * gamma(h) * (0.5 * h * (2.0 * h - 1.0)).sqrt(),
        integrals_phi: basis.iter().map(|b| b.integral()).collect(),
        h_tilde_integral: coef.get(&TrigBasisFunction::Constant).copied().unwrap_or(0.0),
        lambda: lambda.clone(),
        gamma: g,
    };
    Limits { lambda, gamma: g, gamma_inv, q, limit_law }
}
