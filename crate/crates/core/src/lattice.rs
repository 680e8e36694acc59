//! Lattice geometry shared by the Rosenblatt generators and the calibration.
//!
//! Time is cut into uniform cells of length `δ`. The first `K` cells are
//! refined: cell 0 dyadically towards the origin (where `∂K` is singular in
//! `s`) and cells `1..K` into a few equal pieces. The same pieces serve as
//! noise cells (Brownian increments) and as quadrature cells in `u`.
//!
//! Kernel entries are cell averages of `∂K(u_j, ·)` over noise cells, exact
//! (incomplete beta) wherever a refined piece is involved and factorized into
//! a `y`-average times a `(u - y)`-average on uniform cells, which turns the
//! bulk of the first-chaos sums into a causal convolution.

use crate::error::{Error, Result};
use crate::kernel::HurstParams;
use crate::rng::NormalStream;
use crate::special::beta_inc_diff;
use nalgebra::DMatrix;

/// Dyadic levels in the first cell.
pub const DYADIC_LEVELS: usize = 12;
/// Equal pieces per refined cell after the first.
pub const SUBCELLS: usize = 4;
/// Upper bound on the number of refined cells.
pub const MAX_CORNER_CELLS: usize = 16;

const STREAM_UNIFORM: u64 = 0;
const STREAM_CORNER: u64 = 1;

/// Number of refined cells for step `delta` on a lattice of `n_cells` cells.
pub fn corner_cells(delta: f64, n_cells: usize) -> usize {
    let per_unit = (1.0 / delta).round() as usize;
    (per_unit / 4).clamp(1, MAX_CORNER_CELLS).min(n_cells)
}

/// Edges of the refined pieces covering `[0, k δ]`.
pub fn corner_edges(delta: f64, k: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(DYADIC_LEVELS + 2 + k * SUBCELLS);
    e.push(0.0);
    for l in (1..=DYADIC_LEVELS).rev() {
        e.push(delta / (1u64 << l) as f64);
    }
    e.push(delta);
    for i in 1..k {
        for j in 1..SUBCELLS {
            e.push((i as f64 + j as f64 / SUBCELLS as f64) * delta);
        }
        e.push((i + 1) as f64 * delta);
    }
    e
}

/// An interval of the lattice together with the uniform cell that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub owner: usize,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

fn pieces(delta: f64, n_cells: usize, corner: usize) -> Vec<Piece> {
    let edges = corner_edges(delta, corner);
    let mut out = Vec::with_capacity(edges.len() - 1 + n_cells - corner);
    for w in edges.windows(2) {
        let owner = ((w[0] / delta + 1e-9).floor() as usize).min(corner - 1);
        out.push(Piece { start: w[0], end: w[1], owner });
    }
    for i in corner..n_cells {
        out.push(Piece { start: i as f64 * delta, end: (i + 1) as f64 * delta, owner: i });
    }
    out
}

/// Geometry and kernel cell averages for a lattice of `n_cells` cells.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub hurst: HurstParams,
    pub c: f64,
    pub delta: f64,
    pub n_cells: usize,
    pub corner: usize,
    /// Number of refined pieces (same for noise cells and nodes).
    pub n_corner_pieces: usize,
    /// Noise cells: refined pieces, then uniform cells `corner..n_cells`.
    pub cells: Vec<Piece>,
    /// `y`-averages of `y^{1/2-H'}` over uniform cell `i` (zero for `i < corner`).
    pub ybar: Vec<f64>,
    /// `(u - y)^{H'-3/2}` averages for lag `k` between a uniform node and cell.
    pub abar: Vec<f64>,
}

impl KernelGrid {
    pub fn new(hurst: HurstParams, c: f64, delta: f64, n_cells: usize) -> Self {
        let corner = corner_cells(delta, n_cells);
        let cells = pieces(delta, n_cells, corner);
        let n_corner_pieces = cells.len() - (n_cells - corner);
        let p1 = hurst.exp_s() + 1.0;
        let a1 = hurst.exp_diff() + 1.0;
        let ybar = (0..n_cells)
            .map(|i| {
                if i < corner {
                    0.0
                } else {
                    let i = i as f64;
                    delta.powf(p1 - 1.0) * ((i + 1.0).powf(p1) - i.powf(p1)) / p1
                }
            })
            .collect();
        let abar = (0..n_cells)
            .map(|k| {
                let k = k as f64;
                delta.powf(a1 - 1.0) * ((k + 0.5).powf(a1) - (k - 0.5).max(0.0).powf(a1)) / a1
            })
            .collect();
        Self { hurst, c, delta, n_cells, corner, n_corner_pieces, cells, ybar, abar }
    }

    /// Quadrature nodes in `u` coincide with the noise cells (midpoint rule).
    pub fn nodes(&self) -> &[Piece] {
        &self.cells
    }

    pub fn is_uniform(&self, index: usize) -> bool {
        index >= self.n_corner_pieces
    }

    /// `c u^{H'-1/2}` at node `j`.
    pub fn u_factor(&self, j: usize) -> f64 {
        self.c * self.cells[j].mid().powf(self.hurst.exp_u())
    }

    /// Cell average of `∂K(u_j, ·)` over noise cell `c` (zero beyond `u_j`).
    pub fn entry(&self, j: usize, c: usize) -> f64 {
        let node = self.cells[j];
        let cell = self.cells[c];
        let u = node.mid();
        if cell.start >= u {
            return 0.0;
        }
        if self.is_uniform(j) && self.is_uniform(c) {
            let m = node.owner;
            let i = cell.owner;
            return self.u_factor(j) * self.ybar[i] * self.abar[m - i];
        }
        let p = self.hurst.exp_s() + 1.0;
        let q = self.hurst.exp_diff() + 1.0;
        let x0 = cell.start / u;
        let x1 = cell.end.min(u) / u;
        self.u_factor(j) * beta_inc_diff(x0, x1, p, q) / cell.len()
    }

    /// Dense matrix of kernel entries, nodes × cells.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.cells.len();
        DMatrix::from_fn(n, n, |j, c| self.entry(j, c))
    }
}

/// `‖P‖²`, `⟨P, D⟩`, `‖D‖²` for the lattice quadratic form of `Z_{t_k}`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticForm {
    pub pp: f64,
    pub pd: f64,
    pub dd: f64,
}

impl QuadraticForm {
    /// `‖P + κ D‖²`; the lattice variance is `2 d² ‖P + κ D‖²`.
    pub fn value(&self, kappa: f64) -> f64 {
        self.pp + 2.0 * kappa * self.pd + kappa * kappa * self.dd
    }
}

/// Symmetric matrix `Q_k` of `Z_{t_k} / d` in normalized noise coordinates
/// `ξ_c = ΔB_c / √ℓ_c`: `Z_{t_k} = d (ξᵀ Q_k ξ - tr Q_k)`.
pub fn lattice_q_matrix(grid: &KernelGrid, dense: &DMatrix<f64>, k: usize, kappa: f64) -> DMatrix<f64> {
    let (p, d) = p_and_d(grid, dense, k);
    let mut q = p;
    for (c, dc) in d.iter().enumerate() {
        q[(c, c)] += kappa * dc;
    }
    q
}

fn p_and_d(grid: &KernelGrid, dense: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let n = grid.cells.len();
    let rows: Vec<usize> = (0..n).filter(|&j| grid.cells[j].owner < k).collect();
    let sqrt_len: Vec<f64> = grid.cells.iter().map(|c| c.len().sqrt()).collect();
    let g = DMatrix::from_fn(rows.len(), n, |r, c| {
        let j = rows[r];
        grid.cells[j].len().sqrt() * dense[(j, c)] * sqrt_len[c]
    });
    let p = g.tr_mul(&g);
    let h = grid.hurst.h();
    let d = grid
        .cells
        .iter()
        .map(|c| if c.owner < k { c.len().powf(h) } else { 0.0 })
        .collect();
    (p, d)
}

/// Quadratic-form norms for each grid index in `ks`.
pub fn lattice_quadratic_forms(grid: &KernelGrid, ks: &[usize]) -> Vec<QuadraticForm> {
    let dense = grid.dense();
    ks.iter()
        .map(|&k| {
            let (p, d) = p_and_d(grid, &dense, k);
            let pp = p.iter().map(|x| x * x).sum();
            let pd = d.iter().enumerate().map(|(c, dc)| p[(c, c)] * dc).sum();
            let dd = d.iter().map(|x| x * x).sum();
            QuadraticForm { pp, pd, dd }
        })
        .collect()
}

/// Brownian increments on a uniform lattice, with the refined pieces of the
/// first cells kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    pub delta: f64,
    /// `ΔB_i` over uniform cells `[iδ, (i+1)δ]`, each `N(0, δ)`.
    pub increments: Vec<f64>,
    /// Increments over the refined pieces of the first cells; they sum to the
    /// corresponding entries of `increments`.
    pub corner_increments: Vec<f64>,
    pub seed: u64,
}

impl BrownianLattice {
    pub fn n_cells(&self) -> usize {
        self.increments.len()
    }

    pub fn n_points(&self) -> usize {
        self.increments.len() + 1
    }

    pub fn corner(&self) -> usize {
        corner_cells(self.delta, self.n_cells())
    }

    /// All noise-cell increments in [`KernelGrid`] cell order.
    pub fn cell_increments(&self) -> Vec<f64> {
        let k = self.corner();
        let mut v = Vec::with_capacity(self.corner_increments.len() + self.n_cells() - k);
        v.extend_from_slice(&self.corner_increments);
        v.extend_from_slice(&self.increments[k..]);
        v
    }
}

/// Counter-based Brownian increments on `n_points` grid points with step `delta`.
///
/// Uniform cell `i` (beyond the refined ones) uses normal number `i` of one
/// stream, refined piece `q` uses normal number `q` of another, so every
/// increment depends only on `(seed, index)` and longer lattices extend
/// shorter ones.
pub fn generate_brownian(n_points: usize, delta: f64, seed: u64) -> Result<BrownianLattice> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("n_points must be at least 2, got {n_points}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let n = n_points - 1;
    let k = corner_cells(delta, n);
    let edges = corner_edges(delta, k);
    let mut corner_increments = Vec::with_capacity(edges.len() - 1);
    let mut increments = vec![0.0; n];
    let mut fine = NormalStream::new(seed, STREAM_CORNER, 0);
    for w in edges.windows(2) {
        let dv = fine.next_normal() * (w[1] - w[0]).sqrt();
        let owner = ((w[0] / delta + 1e-9).floor() as usize).min(k - 1);
        increments[owner] += dv;
        corner_increments.push(dv);
    }
    let sd = delta.sqrt();
    let mut coarse = NormalStream::new(seed, STREAM_UNIFORM, k as u64);
    for inc in increments.iter_mut().skip(k) {
        *inc = coarse.next_normal() * sd;
    }
    Ok(BrownianLattice { delta, increments, corner_increments, seed })
}
