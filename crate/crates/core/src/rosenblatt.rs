//! Rosenblatt sample paths from the double Wiener-Itô representation.
//!
//! On the lattice of [`crate::lattice`], with first-chaos sums
//! `W_j = Σ_c G_{jc} ΔB_c` and their variances `E_j = Σ_c G_{jc}² ℓ_c`,
//!
//! ```text
//! Z_{t_k} = d_H [ Σ_{j: owner(j) < k} w_j (W_j² - E_j)
//!               + κ Σ_{c: owner(c) < k} ℓ_c^{H-1} (ΔB_c² - ℓ_c) ]
//! ```
//!
//! which is a centered element of the second chaos. The first sum is the
//! Wick square of the discretized `∫ ∂K(u, y) dB_y`; the second replaces the
//! diagonal band of the kernel, which cell averages cannot resolve, by a
//! calibrated multiple of its exact scaling.

use crate::error::{Error, Result};
use crate::kernel::{HurstParams, KernelConstants};
use crate::lattice::{lattice_q_matrix, BrownianLattice, KernelGrid};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::fmt::Write as _;
use std::sync::Arc;

/// Largest lattice accepted by [`rosenblatt_path_bruteforce`].
pub const BRUTEFORCE_MAX_CELLS: usize = 512;

/// Uniform-cell counts at or below this use a direct convolution.
const DIRECT_CONVOLUTION_MAX: usize = 256;

/// A Rosenblatt path on a uniform grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenblattPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub hurst: HurstParams,
    pub consts: KernelConstants,
}

impl RosenblattPath {
    pub fn delta(&self) -> f64 {
        self.consts.grid_delta
    }

    /// Multiply every value by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.values {
            *v *= factor;
        }
        self
    }

    /// CSV with header `t,z`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 48 + 4);
        s.push_str("t,z\n");
        for (t, z) in self.times.iter().zip(&self.values) {
            let _ = writeln!(s, "{:.16e},{:.16e}", t, z);
        }
        s
    }
}

/// How the uniform part of the first-chaos sums is convolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convolution {
    Auto,
    Direct,
    Fft,
}

/// Precomputed geometry for generating Rosenblatt paths of up to `n_cells`
/// cells. Cheap to share between threads; any lattice with the same step and
/// at most `n_cells` cells (and the same refined-cell count) can be used.
pub struct RosenblattGenerator {
    grid: KernelGrid,
    consts: KernelConstants,
    hurst: HurstParams,
    /// `G_{jc}` for every node `j` and refined piece `c`, row-major.
    corner_g: Vec<f64>,
    /// `c u_m^{H'-1/2}` for uniform nodes.
    u_factor: Vec<f64>,
    /// `E_j` per node.
    mean_sq: Vec<f64>,
    /// `κ ℓ_c^{H-1}` per noise cell.
    diag_weight: Vec<f64>,
    fft_len: usize,
    abar_spectrum: Vec<Complex<f64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RosenblattGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RosenblattGenerator")
            .field("n_cells", &self.grid.n_cells)
            .field("delta", &self.grid.delta)
            .field("consts", &self.consts)
            .finish()
    }
}

impl RosenblattGenerator {
    pub fn new(hurst: HurstParams, consts: KernelConstants, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidArgument("lattice needs at least one cell".into()));
        }
        consts.check_resolution(&hurst, consts.grid_delta)?;
        let grid = KernelGrid::new(hurst, consts.c_hprime, consts.grid_delta, n_cells);
        let ncp = grid.n_corner_pieces;
        let n_nodes = grid.cells.len();
        let mut corner_g = vec![0.0; n_nodes * ncp];
        for j in 0..n_nodes {
            for c in 0..ncp {
                corner_g[j * ncp + c] = grid.entry(j, c);
            }
        }
        let nu = n_cells - grid.corner;
        let u_factor: Vec<f64> = (0..nu).map(|r| grid.u_factor(ncp + r)).collect();

        let fft_len = (2 * nu).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let ifft = planner.plan_fft_inverse(fft_len);
        let mut abar_spectrum: Vec<Complex<f64>> = (0..fft_len)
            .map(|k| Complex::new(if k < nu { grid.abar[k] } else { 0.0 }, 0.0))
            .collect();
        fft.process(&mut abar_spectrum);

        // E_j: refined pieces plus the uniform convolution of ȳ²δ with ā²
        let mut mean_sq: Vec<f64> = (0..n_nodes)
            .map(|j| {
                (0..ncp)
                    .map(|c| corner_g[j * ncp + c].powi(2) * grid.cells[c].len())
                    .sum()
            })
            .collect();
        if nu > 0 {
            let y2: Vec<f64> = (0..nu)
                .map(|r| grid.ybar[grid.corner + r].powi(2) * grid.delta)
                .collect();
            let a2: Vec<f64> = grid.abar[..nu].iter().map(|a| a * a).collect();
            let conv = if nu <= DIRECT_CONVOLUTION_MAX {
                direct_causal_convolution(&a2, &y2)
            } else {
                let mut planner = FftPlanner::new();
                fft_causal_convolution(&mut planner, &a2, &y2)
            };
            for r in 0..nu {
                mean_sq[ncp + r] += u_factor[r].powi(2) * conv[r];
            }
        }

        let h = hurst.h();
        let diag_weight = grid
            .cells
            .iter()
            .map(|c| consts.kappa * c.len().powf(h - 1.0))
            .collect();

        Ok(Self {
            grid,
            consts,
            hurst,
            corner_g,
            u_factor,
            mean_sq,
            diag_weight,
            fft_len,
            abar_spectrum,
            fft,
            ifft,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells
    }

    pub fn consts(&self) -> &KernelConstants {
        &self.consts
    }

    pub fn hurst(&self) -> &HurstParams {
        &self.hurst
    }

    fn check_lattice(&self, lattice: &BrownianLattice) -> Result<()> {
        self.consts.check_resolution(&self.hurst, lattice.delta)?;
        if lattice.n_cells() > self.grid.n_cells {
            return Err(Error::SizeLimit { size: lattice.n_cells(), limit: self.grid.n_cells });
        }
        if lattice.corner() != self.grid.corner
            || lattice.corner_increments.len() != self.grid.n_corner_pieces
        {
            return Err(Error::InvalidArgument(format!(
                "lattice of {} cells is too short for this generator's refined corner",
                lattice.n_cells()
            )));
        }
        Ok(())
    }

    pub fn generate(&self, lattice: &BrownianLattice) -> Result<RosenblattPath> {
        self.generate_with(lattice, Convolution::Auto)
    }

    pub fn generate_with(&self, lattice: &BrownianLattice, method: Convolution) -> Result<RosenblattPath> {
        self.check_lattice(lattice)?;
        let grid = &self.grid;
        let n = lattice.n_cells();
        let k = grid.corner;
        let ncp = grid.n_corner_pieces;
        let nu = n - k;
        let db_corner = &lattice.corner_increments;
        let db_uniform = &lattice.increments[k..];

        let v: Vec<f64> = (0..nu).map(|r| grid.ybar[k + r] * db_uniform[r]).collect();
        let conv = match method {
            Convolution::Direct => direct_causal_convolution(&grid.abar[..nu], &v),
            Convolution::Fft => self.fft_convolution(&v),
            Convolution::Auto if nu <= DIRECT_CONVOLUTION_MAX => {
                direct_causal_convolution(&grid.abar[..nu], &v)
            }
            Convolution::Auto => self.fft_convolution(&v),
        };

        let mut inc = vec![0.0; n];
        for j in 0..ncp + nu {
            let row = &self.corner_g[j * ncp..(j + 1) * ncp];
            let mut w: f64 = row.iter().zip(db_corner).map(|(g, b)| g * b).sum();
            if j >= ncp {
                w += self.u_factor[j - ncp] * conv[j - ncp];
            }
            let cell = grid.cells[j];
            inc[cell.owner] += cell.len() * (w * w - self.mean_sq[j]);
        }
        for (c, &b) in db_corner.iter().enumerate() {
            let cell = grid.cells[c];
            inc[cell.owner] += self.diag_weight[c] * (b * b - cell.len());
        }
        for (r, &b) in db_uniform.iter().enumerate() {
            inc[k + r] += self.diag_weight[ncp + r] * (b * b - grid.delta);
        }
        Ok(self.assemble(lattice, &inc))
    }

    fn fft_convolution(&self, v: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = (0..self.fft_len)
            .map(|i| Complex::new(if i < v.len() { v[i] } else { 0.0 }, 0.0))
            .collect();
        self.fft.process(&mut buf);
        for (x, a) in buf.iter_mut().zip(&self.abar_spectrum) {
            *x *= a;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        buf[..v.len()].iter().map(|x| x.re * scale).collect()
    }

    fn assemble(&self, lattice: &BrownianLattice, inc: &[f64]) -> RosenblattPath {
        let d = self.consts.d_h;
        let mut values = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for x in inc {
            acc += x;
            values.push(d * acc);
        }
        let times = (0..=inc.len()).map(|i| i as f64 * lattice.delta).collect();
        RosenblattPath { times, values, hurst: self.hurst, consts: self.consts }
    }
}

/// `out[r] = Σ_{i ≤ r} kernel[r - i] · v[i]`.
fn direct_causal_convolution(kernel: &[f64], v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|r| (0..=r).map(|i| kernel[r - i] * v[i]).sum())
        .collect()
}

fn fft_causal_convolution(planner: &mut FftPlanner<f64>, kernel: &[f64], v: &[f64]) -> Vec<f64> {
    let len = (2 * v.len()).next_power_of_two().max(2);
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);
    let pad = |x: &[f64]| -> Vec<Complex<f64>> {
        (0..len)
            .map(|i| Complex::new(if i < x.len() { x[i] } else { 0.0 }, 0.0))
            .collect()
    };
    let mut a = pad(&kernel[..v.len()]);
    let mut b = pad(v);
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in b.iter_mut().zip(&a) {
        *x *= y;
    }
    ifft.process(&mut b);
    b[..v.len()].iter().map(|x| x.re / len as f64).collect()
}

/// Rosenblatt path on `lattice` by the fast first-chaos form.
pub fn rosenblatt_path_fast(
    lattice: &BrownianLattice,
    hurst: &HurstParams,
    consts: &KernelConstants,
) -> Result<RosenblattPath> {
    consts.check_resolution(hurst, lattice.delta)?;
    RosenblattGenerator::new(*hurst, *consts, lattice.n_cells())?.generate(lattice)
}

/// Rosenblatt path by the explicit double sum
/// `Z_{t_k} = d_H Σ_{c, c'} A_k(c, c') (ΔB_c ΔB_{c'} - ℓ_c 1{c = c'})`
/// with `A_k = Σ_{owner(j) < k} w_j G_j G_jᵀ + κ diag(ℓ^{H-1} 1{owner < k})`.
/// Cubic cost; limited to [`BRUTEFORCE_MAX_CELLS`] cells.
pub fn rosenblatt_path_bruteforce(
    lattice: &BrownianLattice,
    hurst: &HurstParams,
    consts: &KernelConstants,
) -> Result<RosenblattPath> {
    consts.check_resolution(hurst, lattice.delta)?;
    let n = lattice.n_cells();
    if n > BRUTEFORCE_MAX_CELLS {
        return Err(Error::SizeLimit { size: n, limit: BRUTEFORCE_MAX_CELLS });
    }
    let grid = KernelGrid::new(*hurst, consts.c_hprime, lattice.delta, n);
    let db = lattice.cell_increments();
    let nc = grid.cells.len();
    let g = grid.dense();
    let mut a = vec![0.0; nc * nc];
    let mut values = vec![0.0; n + 1];
    let mut j = 0;
    for k in 1..=n {
        // add nodes and diagonal cells owned by cell k - 1
        while j < nc && grid.cells[j].owner < k {
            let w = grid.cells[j].len();
            for c in 0..nc {
                let gc = w * g[(j, c)];
                if gc == 0.0 {
                    continue;
                }
                for c2 in 0..nc {
                    a[c * nc + c2] += gc * g[(j, c2)];
                }
            }
            a[j * nc + j] += consts.kappa * grid.cells[j].len().powf(hurst.h() - 1.0);
            j += 1;
        }
        let mut z = 0.0;
        for c in 0..nc {
            for c2 in 0..nc {
                let x = a[c * nc + c2];
                if c == c2 {
                    z += x * (db[c] * db[c] - grid.cells[c].len());
                } else {
                    z += x * db[c] * db[c2];
                }
            }
        }
        values[k] = consts.d_h * z;
    }
    let times = (0..=n).map(|i| i as f64 * lattice.delta).collect();
    Ok(RosenblattPath { times, values, hurst: *hurst, consts: *consts })
}

/// `½ (t^{2H} + s^{2H} - |t - s|^{2H})`.
pub fn covariance_oracle(hurst: &HurstParams, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0) || !(t >= 0.0) {
        return Err(Error::Domain(format!("covariance needs s, t >= 0, got s = {s}, t = {t}")));
    }
    let e = 2.0 * hurst.h();
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Exact covariances `Cov(Z_{t_i}, Z_{t_j})` of the lattice process at grid
/// indices `indices`, from `Cov = 2 d² ⟨Q_i, Q_j⟩_F`.
pub fn lattice_covariance(
    hurst: &HurstParams,
    consts: &KernelConstants,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let n = indices.iter().copied().max().unwrap_or(0).max(1);
    let grid = KernelGrid::new(*hurst, consts.c_hprime, consts.grid_delta, n);
    let dense = grid.dense();
    let qs: Vec<_> = indices
        .iter()
        .map(|&k| lattice_q_matrix(&grid, &dense, k, consts.kappa))
        .collect();
    let d2 = 2.0 * consts.d_h * consts.d_h;
    Ok(qs
        .iter()
        .map(|a| qs.iter().map(|b| d2 * a.dot(b)).collect())
        .collect())
}

/// Forward sum `Σ_k g(t_k) (Z_{t_{k+1}} - Z_{t_k})`; `g` is sampled at every
/// grid time of `path` (its last value is unused).
pub fn wiener_rosenblatt_integral(g: &[f64], path: &RosenblattPath) -> Result<f64> {
    if g.len() != path.values.len() {
        return Err(Error::LengthMismatch { expected: path.values.len(), actual: g.len() });
    }
    Ok(path
        .values
        .windows(2)
        .zip(g)
        .map(|(z, gk)| gk * (z[1] - z[0]))
        .sum())
}
