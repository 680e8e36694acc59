//! Least-squares and alternative estimators of `ϑ = (μ_1, ..., μ_p, α)` from
//! one observed path.
//!
//! `dX` integrals are forward sums `Σ g(t_k)(X_{k+1} - X_k)`; time integrals
//! are left-endpoint sums `Σ g(t_k) X_k δ`. Both use the same nodes as the
//! Euler scheme, so for a simulated path
//! `∫ g dX = ∫ g (L - αX) dt + ∫ g dZ` holds exactly on the lattice.

use crate::error::{Error, Result};
use crate::kernel::HurstParams;
use crate::model::{check_distinct, SamplePath, TrigBasisFunction};
use crate::special::gamma;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Threshold on `|(1/n) ∫ φ_{p+1} X dt|` below which the A1 estimator refuses.
pub const A1_DENOMINATOR_GUARD: f64 = 1e-6;

/// Points of the orthogonality check for an extra basis function.
const ORTHOGONALITY_POINTS: usize = 10_000;

/// Forward sum `Σ_k g(t_k) (X_{k+1} - X_k)`; `g` is sampled at every grid
/// point of `x` (the last value is unused).
pub fn integral_against_path(g: &[f64], x: &SamplePath) -> Result<f64> {
    if g.len() != x.values.len() {
        return Err(Error::LengthMismatch { expected: x.values.len(), actual: g.len() });
    }
    Ok(x.values.windows(2).zip(g).map(|(w, gk)| gk * (w[1] - w[0])).sum())
}

/// Left-endpoint sum `Σ_k g(t_k) X_k δ` over the steps of `x`.
pub fn time_integral(g: &[f64], x: &SamplePath) -> Result<f64> {
    if g.len() != x.values.len() {
        return Err(Error::LengthMismatch { expected: x.values.len(), actual: g.len() });
    }
    let n = x.n_steps();
    Ok(x.delta * g[..n].iter().zip(&x.values[..n]).map(|(a, b)| a * b).sum::<f64>())
}

/// Path statistics of the least-squares problem `Q_n ϑ = P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LseComponents {
    pub n: usize,
    /// `a_{n,i} = ∫_0^n φ_i X dt`.
    pub a_n: Vec<f64>,
    /// `b_n = ∫_0^n X² dt`.
    pub b_n: f64,
    /// `Λ_{n,i} = a_{n,i} / n`.
    pub lambda_n: Vec<f64>,
    /// `γ_n^{-1} = b_n / n - Σ Λ_{n,i}²`.
    pub gamma_n_inv: f64,
    pub q_n: DMatrix<f64>,
    pub p_n: DVector<f64>,
    /// `∫_0^n φ_i dX`.
    pub phi_dx: Vec<f64>,
}

impl LseComponents {
    /// `γ_n`, or a degenerate-path error when `γ_n^{-1}` vanishes relative to
    /// `b_n / n` (the Bessel inequality is then an equality).
    pub fn gamma_n(&self) -> Result<f64> {
        let scale = self.b_n / self.n as f64;
        if !(self.gamma_n_inv > 1e-12 * scale) || !(scale > 0.0) {
            return Err(Error::DegeneratePath(self.gamma_n_inv));
        }
        Ok(1.0 / self.gamma_n_inv)
    }
}

pub(crate) struct BasisSamples {
    pub values: Vec<Vec<f64>>,
}

fn check_path(x: &SamplePath, basis: &[TrigBasisFunction]) -> Result<usize> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("basis must not be empty".into()));
    }
    check_distinct(basis)?;
    let horizon = x.horizon();
    let n = horizon.round();
    if n < 1.0 || (horizon - n).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not a whole number of periods"
        )));
    }
    let per_unit = (1.0 / x.delta).round();
    let max_freq = basis.iter().map(|b| b.frequency()).max().unwrap_or(0) as f64;
    if 2.0 * max_freq >= per_unit {
        return Err(Error::InvalidArgument(format!(
            "grid of {per_unit} points per unit cannot resolve frequency {max_freq}"
        )));
    }
    Ok(n as usize)
}

fn sample_basis(x: &SamplePath, basis: &[TrigBasisFunction]) -> BasisSamples {
    BasisSamples { values: basis.iter().map(|b| b.sample(x.delta, x.values.len())).collect() }
}

/// `a_n`, `b_n`, `Λ_n`, `γ_n^{-1}`, `Q_n` and `P_n` for the path `x`.
///
/// `Q_n = [n Id_p, -a_n; -a_nᵀ, b_n]`, `P_n = (∫φ_i dX, -∫X dX)`.
/// A degenerate `γ_n^{-1}` is reported by [`LseComponents::gamma_n`] and the
/// estimators, not here.
pub fn compute_lse_components(x: &SamplePath, basis: &[TrigBasisFunction]) -> Result<LseComponents> {
    let n = check_path(x, basis)?;
    let samples = sample_basis(x, basis);
    components_from_samples(x, n, &samples)
}

fn components_from_samples(x: &SamplePath, n: usize, s: &BasisSamples) -> Result<LseComponents> {
    let p = s.values.len();
    let nf = n as f64;
    let a_n = s.values.iter().map(|g| time_integral(g, x)).collect::<Result<Vec<_>>>()?;
    let phi_dx = s.values.iter().map(|g| integral_against_path(g, x)).collect::<Result<Vec<_>>>()?;
    let b_n = time_integral(&x.values, x)?;
    let x_dx = integral_against_path(&x.values, x)?;
    let lambda_n: Vec<f64> = a_n.iter().map(|a| a / nf).collect();
    let gamma_n_inv = b_n / nf - lambda_n.iter().map(|l| l * l).sum::<f64>();
    let q_n = DMatrix::from_fn(p + 1, p + 1, |i, j| match (i < p, j < p) {
        (true, true) => if i == j { nf } else { 0.0 },
        (true, false) => -a_n[i],
        (false, true) => -a_n[j],
        (false, false) => b_n,
    });
    let mut p_n = DVector::from_column_slice(&phi_dx);
    p_n = p_n.push(-x_dx);
    Ok(LseComponents { n, a_n, b_n, lambda_n, gamma_n_inv, q_n, p_n, phi_dx })
}

/// Closed-form inverse
/// `Q_n^{-1} = (1/n) [Id + γ_n Λ_n Λ_nᵀ, γ_n Λ_n; γ_n Λ_nᵀ, γ_n]`.
///
/// The off-diagonal blocks are `+γ_n Λ_n`: with `Q_n = [n Id, -a_n; -a_nᵀ, b_n]`
/// the top-right block of `Q_n Q_n^{-1}` is `γ_n Λ_n - a_n γ_n / n = 0`.
pub fn invert_qn(c: &LseComponents) -> Result<DMatrix<f64>> {
    if !(c.gamma_n_inv > 0.0) {
        return Err(Error::Singular);
    }
    let g = 1.0 / c.gamma_n_inv;
    let l = &c.lambda_n;
    let p = l.len();
    let nf = c.n as f64;
    Ok(DMatrix::from_fn(p + 1, p + 1, |i, j| {
        let v = match (i < p, j < p) {
            (true, true) => (i == j) as u8 as f64 + g * (l[i] * l[j]),
            (true, false) => g * l[i],
            (false, true) => g * l[j],
            (false, false) => g,
        };
        v / nf
    }))
}

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "lse")]
    Lse,
    #[serde(rename = "alt_a1")]
    AltA1,
    #[serde(rename = "alt_a1star")]
    AltA1Star,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lse => "lse",
            Self::AltA1 => "alt_a1",
            Self::AltA1Star => "alt_a1star",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lse" => Ok(Self::Lse),
            "alt_a1" => Ok(Self::AltA1),
            "alt_a1star" => Ok(Self::AltA1Star),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Flag carried by least-squares results: the `∫X dX` term is a forward
/// (pathwise) sum standing in for a Skorohod integral.
pub const FLAG_PATHWISE_SURROGATE: &str = "pathwise_surrogate";
pub const FLAG_OK: &str = "ok";

/// Estimate `(μ̂_1, ..., μ̂_p, α̂)` with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimator_kind: EstimatorKind,
    pub theta_hat: Vec<f64>,
    pub horizon_n: usize,
    pub diagnostics: BTreeMap<String, f64>,
    pub flag: String,
}

impl EstimateResult {
    pub fn alpha_hat(&self) -> f64 {
        *self.theta_hat.last().expect("theta has at least one entry")
    }

    pub fn gamma_n_inv(&self) -> f64 {
        self.diagnostics.get("gamma_n_inv").copied().unwrap_or(f64::NAN)
    }

    /// `replicate,seed,n,estimator,mu_hat_1..mu_hat_p,alpha_hat,gamma_n_inv,flag`
    pub fn to_csv_row(&self, replicate: usize, seed: u64) -> String {
        let mut s = format!("{replicate},{seed},{},{}", self.horizon_n, self.estimator_kind);
        for v in &self.theta_hat {
            s.push_str(&format!(",{v:.16e}"));
        }
        s.push_str(&format!(",{:.16e},{}", self.gamma_n_inv(), self.flag));
        s
    }

    /// Header matching [`EstimateResult::to_csv_row`] for `p` drift coefficients.
    pub fn csv_header(p: usize) -> String {
        let mut s = String::from("replicate,seed,n,estimator");
        for i in 1..=p {
            s.push_str(&format!(",mu_hat_{i}"));
        }
        s.push_str(",alpha_hat,gamma_n_inv,flag");
        s
    }
}

/// Least-squares estimate `ϑ̂_n = Q_n^{-1} P_n`.
pub fn lse_estimate(x: &SamplePath, basis: &[TrigBasisFunction]) -> Result<EstimateResult> {
    let c = compute_lse_components(x, basis)?;
    c.gamma_n()?;
    let qi = invert_qn(&c)?;
    let theta = &qi * &c.p_n;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("gamma_n_inv".to_string(), c.gamma_n_inv);
    diagnostics.insert("b_n".to_string(), c.b_n);
    Ok(EstimateResult {
        estimator_kind: EstimatorKind::Lse,
        theta_hat: theta.iter().copied().collect(),
        horizon_n: c.n,
        diagnostics,
        flag: FLAG_PATHWISE_SURROGATE.to_string(),
    })
}

/// `max_i |⟨φ, φ_i⟩|` by a fine midpoint rule on `[0, 1]`.
fn max_inner_product(phi: &TrigBasisFunction, basis: &[TrigBasisFunction]) -> f64 {
    let h = 1.0 / ORTHOGONALITY_POINTS as f64;
    basis
        .iter()
        .map(|b| {
            (0..ORTHOGONALITY_POINTS)
                .map(|k| {
                    let t = (k as f64 + 0.5) * h;
                    phi.eval(t) * b.eval(t) * h
                })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

fn mu_bar(c: &LseComponents, alpha: f64) -> Vec<f64> {
    let nf = c.n as f64;
    c.phi_dx.iter().zip(&c.a_n).map(|(dx, a)| (dx + alpha * a) / nf).collect()
}

/// Estimator under (A1): `ᾱ_n = -∫φ_{p+1} dX / ∫φ_{p+1} X dt` and
/// `μ̄_{i,n} = (1/n)(∫φ_i dX + ᾱ_n ∫φ_i X dt)`.
pub fn alt_estimate_a1(
    x: &SamplePath,
    basis: &[TrigBasisFunction],
    phi_extra: TrigBasisFunction,
) -> Result<EstimateResult> {
    if basis.contains(&phi_extra) {
        return Err(Error::InvalidArgument(format!("{phi_extra} is already in the basis")));
    }
    let ip = max_inner_product(&phi_extra, basis);
    if ip > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "{phi_extra} is not orthogonal to the basis (inner product {ip:e})"
        )));
    }
    let mut extended = basis.to_vec();
    extended.push(phi_extra);
    let n = check_path(x, &extended)?;
    let c = compute_lse_components(x, basis)?;
    let g = phi_extra.sample(x.delta, x.values.len());
    let num = integral_against_path(&g, x)?;
    let den = time_integral(&g, x)?;
    let scaled = den / n as f64;
    if !(scaled.abs() >= A1_DENOMINATOR_GUARD) {
        return Err(Error::NearZeroDenominator { value: scaled, threshold: A1_DENOMINATOR_GUARD });
    }
    let alpha = -num / den;
    let mut theta = mu_bar(&c, alpha);
    theta.push(alpha);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("gamma_n_inv".to_string(), c.gamma_n_inv);
    diagnostics.insert("denominator".to_string(), scaled);
    Ok(EstimateResult {
        estimator_kind: EstimatorKind::AltA1,
        theta_hat: theta,
        horizon_n: n,
        diagnostics,
        flag: FLAG_OK.to_string(),
    })
}

/// `(γ^{-1} / (H Γ(2H)))^{-1/(2H)}`, the inverse of `α ↦ α^{-2H} H Γ(2H)`.
pub fn alpha_from_gamma_inv(gamma_inv: f64, hurst: &HurstParams) -> f64 {
    let h = hurst.h();
    (gamma_inv / (h * gamma(2.0 * h))).powf(-1.0 / (2.0 * h))
}

/// Estimator under (A1*): `ᾱ^{(1)}_n = (γ_n^{-1} / (H Γ(2H)))^{-1/(2H)}` and
/// `μ̄^{(1)}_{n,i} = (1/n)(∫φ_i dX + ᾱ^{(1)}_n ∫φ_i X dt)`.
pub fn alt_estimate_a1star(
    x: &SamplePath,
    basis: &[TrigBasisFunction],
    hurst: &HurstParams,
) -> Result<EstimateResult> {
    let c = compute_lse_components(x, basis)?;
    c.gamma_n()?;
    let alpha = alpha_from_gamma_inv(c.gamma_n_inv, hurst);
    let mut theta = mu_bar(&c, alpha);
    theta.push(alpha);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("gamma_n_inv".to_string(), c.gamma_n_inv);
    Ok(EstimateResult {
        estimator_kind: EstimatorKind::AltA1Star,
        theta_hat: theta,
        horizon_n: c.n,
        diagnostics,
        flag: FLAG_OK.to_string(),
    })
}
