//! The fBm-type kernel `K^{H'}`, its derivative, and calibration of the
//! normalizing constants `c_{H'}` and `d(H)` on a lattice.

use crate::error::{Error, Result};
use crate::lattice::{lattice_quadratic_forms, KernelGrid};
use crate::special::tanh_sinh;
use serde::{Deserialize, Serialize};

/// Hurst index of the Rosenblatt process together with the index
/// `H' = (H + 1) / 2` of the underlying fBm kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParams {
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "Hprime")]
    hprime: f64,
}

impl HurstParams {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::InvalidHurst(h));
        }
        Ok(Self { h, hprime: (h + 1.0) / 2.0 })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn hprime(&self) -> f64 {
        self.hprime
    }

    /// Exponent of `s` in `∂K/∂u`: `1/2 - H'`.
    pub(crate) fn exp_s(&self) -> f64 {
        0.5 - self.hprime
    }

    /// Exponent of `u - s` in `∂K/∂u`: `H' - 3/2`.
    pub(crate) fn exp_diff(&self) -> f64 {
        self.hprime - 1.5
    }

    /// Exponent of `u` in `∂K/∂u`: `H' - 1/2`.
    pub(crate) fn exp_u(&self) -> f64 {
        self.hprime - 0.5
    }
}

/// Calibrated normalizing constants for one lattice resolution.
///
/// `kappa` weights the Wick-renormalized diagonal of the lattice double sum;
/// it is fitted together with `d_H` so that the lattice variance scales as
/// `t^{2H}` (see [`calibrate_constants`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Hprime")]
    pub hprime: f64,
    #[serde(rename = "c_Hprime")]
    pub c_hprime: f64,
    #[serde(rename = "d_H")]
    pub d_h: f64,
    pub kappa: f64,
    pub grid_delta: f64,
    pub points_per_unit: usize,
}

impl KernelConstants {
    /// Check that these constants were calibrated for `hurst` at step `delta`.
    pub fn check_resolution(&self, hurst: &HurstParams, delta: f64) -> Result<()> {
        if self.h != hurst.h() {
            return Err(Error::InvalidArgument(format!(
                "constants calibrated for H = {}, requested H = {}",
                self.h,
                hurst.h()
            )));
        }
        if (self.grid_delta - delta).abs() > 1e-12 * delta {
            return Err(Error::ResolutionMismatch {
                calibrated: 1.0 / self.grid_delta,
                lattice: 1.0 / delta,
            });
        }
        Ok(())
    }
}

/// `∫_s^t (u-s)^{H'-3/2} u^{H'-1/2} du · s^{1/2-H'}` without the constant.
pub(crate) fn kernel_k_unit(hurst: &HurstParams, t: f64, s: f64) -> f64 {
    let a = hurst.exp_diff();
    let b = hurst.exp_u();
    let integral = tanh_sinh(|u, dl, _| dl.powf(a) * u.powf(b), s, t, 1e-14);
    s.powf(hurst.exp_s()) * integral
}

/// Kernel `K^{H'}(t, s)` for `0 < s <= t`.
pub fn kernel_k(hurst: &HurstParams, consts: &KernelConstants, t: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) || !(s <= t) || !t.is_finite() {
        return Err(Error::Domain(format!("K(t, s) needs 0 < s <= t, got t = {t}, s = {s}")));
    }
    if s == t {
        return Ok(0.0);
    }
    Ok(consts.c_hprime * kernel_k_unit(hurst, t, s))
}

/// Partial derivative `∂K^{H'}/∂u (u, s)` for `0 < s < u`.
pub fn kernel_dk(hurst: &HurstParams, consts: &KernelConstants, u: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) || !(s < u) || !u.is_finite() {
        return Err(Error::Domain(format!("dK(u, s) needs 0 < s < u, got u = {u}, s = {s}")));
    }
    Ok(consts.c_hprime
        * s.powf(hurst.exp_s())
        * (u - s).powf(hurst.exp_diff())
        * u.powf(hurst.exp_u()))
}

/// Upper end of the admissible diagonal weight.
const KAPPA_MAX: f64 = 20.0;

/// Calibrate `c_{H'}`, `d_H` and the diagonal weight `kappa` on a lattice
/// with `points_per_unit` cells per unit time.
///
/// * `c_{H'}` makes the lattice fBm variance `Σ_i ∫_{cell i} K(1, s)² ds` equal 1.
/// * `kappa` is the root in `[0, 20]` of `V(2) = 2^{2H} V(1)`, where `V(t)` is
///   the exact lattice variance of `Z_t`; it is a quadratic in `kappa`.
/// * `d_H` then makes `V(1) = 1`.
pub fn calibrate_constants(hurst: &HurstParams, points_per_unit: usize) -> Result<KernelConstants> {
    if points_per_unit < 16 {
        return Err(Error::InvalidArgument(format!(
            "points_per_unit must be at least 16, got {points_per_unit}"
        )));
    }
    let m = points_per_unit;
    let delta = 1.0 / m as f64;
    // cell integrals of K(1, ·)², exact up to quadrature error; the squared
    // kernel is singular at 0 so a midpoint sum would drift with δ
    let sum_sq: f64 = (0..m)
        .map(|i| {
            tanh_sinh(
                |s, _, _| kernel_k_unit(hurst, 1.0, s).powi(2),
                i as f64 * delta,
                (i + 1) as f64 * delta,
                1e-13,
            )
        })
        .sum();
    let c_hprime = sum_sq.sqrt().recip();

    let grid = KernelGrid::new(*hurst, c_hprime, delta, 2 * m);
    let forms = lattice_quadratic_forms(&grid, &[m, 2 * m]);
    let (one, two) = (&forms[0], &forms[1]);
    let r = 2f64.powf(2.0 * hurst.h());
    // V_k(κ) ∝ ‖P_k‖² + 2κ⟨P_k, D_k⟩ + κ²‖D_k‖²
    let qa = two.dd - r * one.dd;
    let qb = 2.0 * (two.pd - r * one.pd);
    let qc = two.pp - r * one.pp;
    let kappa = smallest_root_in(qa, qb, qc, 0.0, KAPPA_MAX).ok_or_else(|| {
        Error::CalibrationFailure(format!(
            "no diagonal weight in [0, {KAPPA_MAX}] matches the scaling ratio (H = {}, M = {m})",
            hurst.h()
        ))
    })?;
    let v1 = 2.0 * one.value(kappa);
    if !(v1 > 0.0) || !v1.is_finite() {
        return Err(Error::CalibrationFailure(format!("lattice variance {v1}")));
    }
    Ok(KernelConstants {
        h: hurst.h(),
        hprime: hurst.hprime(),
        c_hprime,
        d_h: v1.sqrt().recip(),
        kappa,
        grid_delta: delta,
        points_per_unit: m,
    })
}

/// Smallest root of `a x² + b x + c` inside `[lo, hi]`.
fn smallest_root_in(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Option<f64> {
    let mut roots = Vec::with_capacity(2);
    if a.abs() <= 1e-14 * (b.abs() + c.abs()) {
        if b != 0.0 {
            roots.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        // numerically stable pair
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q != 0.0 {
            roots.push(q / a);
            roots.push(c / q);
        } else {
            roots.push(0.0);
        }
    }
    roots
        .into_iter()
        .filter(|x| x.is_finite() && *x >= lo && *x <= hi)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |y| y.min(x))))
}
