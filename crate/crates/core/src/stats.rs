//! Sample moments with Monte Carlo standard errors, and slope fits.

use serde::{Deserialize, Serialize};

/// Mean, variance and skewness of a sample with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased variance.
    pub variance: f64,
    pub variance_se: f64,
    /// Third central moment.
    pub third: f64,
    pub skewness: f64,
    pub skewness_se: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        if n < 2 {
            let mean = xs.first().copied().unwrap_or(f64::NAN);
            return Self {
                count: n,
                mean,
                mean_se: f64::NAN,
                variance: f64::NAN,
                variance_se: f64::NAN,
                third: f64::NAN,
                skewness: f64::NAN,
                skewness_se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        let variance = m2 * nf / (nf - 1.0);
        let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
        Self {
            count: n,
            mean,
            mean_se: (variance / nf).sqrt(),
            variance,
            variance_se: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
            third: m3,
            skewness,
            skewness_se: (6.0 / nf).sqrt(),
        }
    }

    /// Moments of `c · X` from those of `X`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            count: self.count,
            mean: c * self.mean,
            mean_se: c.abs() * self.mean_se,
            variance: c * c * self.variance,
            variance_se: c * c * self.variance_se,
            third: c * c * c * self.third,
            skewness: if c == 0.0 { 0.0 } else { c.signum() * self.skewness },
            skewness_se: self.skewness_se,
        }
    }
}

/// `(a - b) / sqrt(se_a² + se_b²)`; infinite when both errors vanish and `a ≠ b`.
pub fn standardized_difference(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if se > 0.0 {
        (a - b) / se
    } else if a == b {
        0.0
    } else {
        f64::INFINITY.copysign(a - b)
    }
}

/// Least-squares slope with a standard error propagated from per-point errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub se: f64,
    /// 95% normal half-width.
    pub half_width: f64,
}

/// Ordinary least-squares slope of `y` on `x`; the error treats the `y_i` as
/// independent with standard errors `se_y`.
pub fn fit_slope(x: &[f64], y: &[f64], se_y: &[f64]) -> SlopeEstimate {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let var: f64 = x.iter().zip(se_y).map(|(a, s)| (a - xm).powi(2) * s * s).sum();
    let se = var.sqrt() / sxx;
    SlopeEstimate { slope: sxy / sxx, se, half_width: 1.96 * se }
}
