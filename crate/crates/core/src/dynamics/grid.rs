//! Tensor-grid discretization of the ground-state operator −Δ + V₂.
//!
//! The kinetic part is assembled as Σ_i ½(D_i⁺ᵀD_i⁺ + D_i⁻ᵀD_i⁻): each row of
//! D_i^± lives on an x_i-face of the grid and combines the face difference in
//! x_i with forward/backward differences in the center directions, averaged
//! over the two face endpoints. Squaring face differences telescopes to the
//! classical Dirichlet Laplacian in the abelian case, and the ± pair both
//! cancels the one-sided quadrature bias at second order and leaves no
//! zero-energy checkerboard mode. Symmetry of the result is exact by
//! construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupPoint;
use crate::taming::EnergyModel;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Compressed sparse rows; symmetric matrices store both triangles.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Build from (row, col, value) triples, merging duplicates. The sort is
    /// stable so that transposed entry pairs, which are pushed in the same
    /// order, accumulate in the same order and stay bitwise symmetric.
    pub fn from_triples(dim: usize, mut triples: Vec<(u32, u32, f64)>) -> Self {
        triples.sort_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_counts = vec![0usize; dim];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triples {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r as usize] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for r in 0..dim {
            row_ptr[r + 1] = row_ptr[r] + row_counts[r];
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    pub fn diag(values: &[f64]) -> Self {
        let triples = values.iter().enumerate().map(|(i, &v)| (i as u32, i as u32, v)).collect();
        Self::from_triples(values.len(), triples)
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// y = A·x. Row-parallel; each row is a sequential sum, so the result is
    /// identical across thread counts.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        #[cfg(feature = "parallel")]
        {
            if crate::exec::threads() != 1 && self.dim >= 4096 {
                let block = 4096;
                let (row_ptr, cols, vals) = (&self.row_ptr, &self.cols, &self.vals);
                y.par_chunks_mut(block).enumerate().for_each(|(bi, chunk)| {
                    let start = bi * block;
                    for (off, slot) in chunk.iter_mut().enumerate() {
                        let r = start + off;
                        let mut acc = 0.0;
                        for idx in row_ptr[r]..row_ptr[r + 1] {
                            acc += vals[idx] * x[cols[idx] as usize];
                        }
                        *slot = acc;
                    }
                });
                return;
            }
        }
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[r] = acc;
        }
    }

    /// Maximum |A − Aᵀ| entry; exactly 0.0 for matrices assembled here.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let (tc, tv) = self.row(*c as usize);
                let back = tc.binary_search(&(r as u32)).map(|i| tv[i]).unwrap_or(0.0);
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }
}

fn advance(multi: &mut [usize], caps: &[usize]) -> bool {
    for a in (0..multi.len()).rev() {
        multi[a] += 1;
        if multi[a] < caps[a] {
            return true;
        }
        multi[a] = 0;
    }
    false
}

/// Node layout of the tensor grid: interior nodes only, Dirichlet outside.
/// Axis a has `dims[a]` nodes at −w + (j+1)·h, h = 2w/(dims[a]+1).
#[derive(Debug, Clone, Serialize)]
pub struct GridGeometry {
    pub dims: Vec<usize>,
    pub half_widths: Vec<f64>,
    pub spacings: Vec<f64>,
    pub n: usize,
    pub m: usize,
}

impl GridGeometry {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for a in (0..self.dims.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        -self.half_widths[axis] + (j as f64 + 1.0) * self.spacings[axis]
    }

    pub fn node_point(&self, multi: &[usize]) -> GroupPoint {
        let mut x = Vec::with_capacity(self.n);
        let mut z = Vec::with_capacity(self.m);
        for (a, &j) in multi.iter().enumerate() {
            let c = self.coord(a, j);
            if a < self.n {
                x.push(c);
            } else {
                z.push(c);
            }
        }
        GroupPoint::new(x, z)
    }
}

/// Discretization + eigensolve settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub grid: Vec<usize>,
    pub half_widths: Vec<f64>,
    pub k: usize,
    pub tol: f64,
    pub v_clamp: f64,
    pub max_matvecs: usize,
}

impl SpectrumConfig {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.grid.len() != n + m || self.half_widths.len() != n + m {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "grid and half_widths must have {} entries (n+m), got {} and {}",
                    n + m,
                    self.grid.len(),
                    self.half_widths.len()
                ),
            });
        }
        if let Some(&g) = self.grid.iter().find(|&&g| g < 8) {
            return Err(Error::GridTooCoarse { min: 8, got: g });
        }
        if self.k < 2 {
            return Err(Error::InvalidParameter { context: format!("need k ≥ 2 eigenvalues, got {}", self.k) });
        }
        if !(self.tol > 0.0) || !(self.v_clamp > 0.0) {
            return Err(Error::InvalidParameter { context: "tol and v_clamp must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianInfo {
    pub grid: GridGeometry,
    pub clamped_nodes: usize,
    pub nnz: usize,
    pub v_clamp: f64,
}

const MEMORY_BUDGET_BYTES: usize = 3 << 30;

/// Assemble H = Σ_i ½(D_i⁺ᵀD_i⁺ + D_i⁻ᵀD_i⁻) + diag(clamp(V₂)).
pub fn assemble_hamiltonian(
    model: &EnergyModel,
    cfg: &SpectrumConfig,
) -> Result<(CsrMatrix, HamiltonianInfo)> {
    let n = model.group.horizontal_dim();
    let m = model.group.center_dim();
    cfg.validate(n, m)?;
    let dims = cfg.grid.clone();
    let naxes = dims.len();
    let total: usize = dims.iter().product();
    let stencil = (2 + 2 * m) * (2 + 2 * m);
    let estimate_bytes = total * (1 + 2 * n * stencil) * 16;
    if estimate_bytes > MEMORY_BUDGET_BYTES {
        return Err(Error::MemoryBudgetExceeded { estimate_bytes, budget_bytes: MEMORY_BUDGET_BYTES });
    }
    let spacings: Vec<f64> =
        dims.iter().zip(&cfg.half_widths).map(|(&g, &w)| 2.0 * w / (g as f64 + 1.0)).collect();
    let grid = GridGeometry { dims: dims.clone(), half_widths: cfg.half_widths.clone(), spacings, n, m };
    let strides = grid.strides();

    let mut triples: Vec<(u32, u32, f64)> = Vec::with_capacity(total * (1 + n * stencil));
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let lin = |mi: &[usize]| -> usize { mi.iter().zip(&strides).map(|(j, s)| j * s).sum() };

    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 + 2 * m);
    let mut xline = vec![0.0; n];
    for i in 0..n {
        let hi = grid.spacings[i];
        let mut caps = dims.clone();
        caps[i] += 1; // slot multi[i] enumerates the dims[i]+1 faces along axis i
        for sign in [1isize, -1] {
            let mut face = vec![0usize; naxes];
            loop {
                for (a, xv) in xline.iter_mut().enumerate() {
                    // (Λx)_i never reads x_i, so the face coordinate is immaterial.
                    *xv = if a == i { 0.0 } else { grid.coord(a, face[a]) };
                }
                entries.clear();
                let endpoint = |slot: isize| -> Option<Vec<usize>> {
                    if slot < 0 || slot >= dims[i] as isize {
                        return None;
                    }
                    let mut mi = face.clone();
                    mi[i] = slot as usize;
                    Some(mi)
                };
                let left = endpoint(face[i] as isize - 1);
                let right = endpoint(face[i] as isize);
                if let Some(mi) = &left {
                    entries.push((lin(mi), -1.0 / hi));
                }
                if let Some(mi) = &right {
                    entries.push((lin(mi), 1.0 / hi));
                }
                for k in 0..m {
                    let c = 0.5 * model.group.lambda_apply(k, &xline)[i];
                    if c == 0.0 {
                        continue;
                    }
                    let axis = n + k;
                    let w = 0.5 * c / grid.spacings[axis];
                    for mi in [&left, &right].into_iter().flatten() {
                        let base = lin(mi);
                        let j = mi[axis] as isize + sign;
                        let neighbor = (j >= 0 && j < dims[axis] as isize)
                            .then(|| (base as isize + sign * strides[axis] as isize) as usize);
                        // forward: c(f[v+e_z] − f[v])/h_z; backward: c(f[v] − f[v−e_z])/h_z.
                        let (base_w, nb_w) = if sign > 0 { (-w, w) } else { (w, -w) };
                        entries.push((base, base_w));
                        if let Some(nb) = neighbor {
                            entries.push((nb, nb_w));
                        }
                    }
                }
                for &(a, ca) in &entries {
                    for &(b, cb) in &entries {
                        triples.push((a as u32, b as u32, (ca * inv_sqrt2) * (cb * inv_sqrt2)));
                    }
                }
                if !advance(&mut face, &caps) {
                    break;
                }
            }
        }
    }

    // Potential diagonal.
    let mut clamped = 0usize;
    let mut multi = vec![0usize; naxes];
    for idx in 0..total {
        let p = grid.node_point(&multi);
        let v2 = model.v2_or_infinity(&p);
        let clamped_v = v2.clamp(-cfg.v_clamp, cfg.v_clamp);
        if clamped_v != v2 {
            clamped += 1;
        }
        triples.push((idx as u32, idx as u32, clamped_v));
        advance(&mut multi, &dims);
    }

    let matrix = CsrMatrix::from_triples(total, triples);
    let nnz = matrix.nnz();
    Ok((matrix, HamiltonianInfo { grid, clamped_nodes: clamped, nnz, v_clamp: cfg.v_clamp }))
}

/// Grid samples of e^{−U/2}, shifted by min U for floating-point headroom and
/// normalized; zero on the singular set.
pub fn ground_state_vector(model: &EnergyModel, grid: &GridGeometry) -> Vec<f64> {
    let total = grid.len();
    let mut us = vec![f64::INFINITY; total];
    let mut umin = f64::INFINITY;
    let mut multi = vec![0usize; grid.dims.len()];
    for slot in us.iter_mut() {
        let p = grid.node_point(&multi);
        if let Ok(u) = model.energy(&p) {
            *slot = u;
            if u < umin {
                umin = u;
            }
        }
        advance(&mut multi, &grid.dims);
    }
    let mut v: Vec<f64> =
        us.iter().map(|&u| if u.is_finite() { (-(u - umin) / 2.0).exp() } else { 0.0 }).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    v
}

/// vᵀAv / vᵀv.
pub fn rayleigh_quotient(a: &CsrMatrix, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    a.matvec(v, &mut av);
    let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|a| a * a).sum();
    num / den
}

/// Text triplet dump (row, col, value) for external inspection.
pub fn dump_matrix(a: &CsrMatrix) -> String {
    use std::fmt::Write;
    let mut out = String::with_capacity(a.nnz() * 24);
    for r in 0..a.dim() {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            let _ = writeln!(out, "{r} {c} {v:.17e}");
        }
    }
    out
}
