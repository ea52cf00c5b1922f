//! Sampling dynamics and the spectral probe of the ground-state operator.

pub mod diag;
pub mod grid;
pub mod lanczos;
pub mod mala;

pub use diag::{
    chain_norm_chi_square, empirical_logsobolev, empirical_poincare, norm_marginal_bins,
    ChiSquareReport, MarginalBins, RatioReport, RatioRow, TestFunction,
};
pub use grid::{
    assemble_hamiltonian, dump_matrix, ground_state_vector, rayleigh_quotient, CsrMatrix,
    GridGeometry, HamiltonianInfo, SpectrumConfig,
};
pub use lanczos::{bottom_spectrum, EigenPairs};
pub use mala::{langevin_chain, ChainConfig, ChainSamples};

use serde::Serialize;

use crate::error::Result;
use crate::taming::EnergyModel;

/// Full spectral report: bottom eigenvalues of −Δ + V₂ on the grid plus the
/// Rayleigh quotient of the injected e^{−U/2} vector.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gap: f64,
    pub ground_rayleigh: f64,
    pub clamped_nodes: usize,
    pub nnz: usize,
    pub dims: Vec<usize>,
    pub half_widths: Vec<f64>,
    pub spacings: Vec<f64>,
    pub matvecs: usize,
}

pub fn spectrum_run(model: &EnergyModel, cfg: &SpectrumConfig) -> Result<SpectrumReport> {
    let (h, info) = assemble_hamiltonian(model, cfg)?;
    let pairs = bottom_spectrum(&h, cfg.k, cfg.tol, cfg.max_matvecs)?;
    let ground = ground_state_vector(model, &info.grid);
    let ground_rayleigh = rayleigh_quotient(&h, &ground);
    let gap = if pairs.values.len() >= 2 { pairs.values[1] - pairs.values[0] } else { f64::NAN };
    Ok(SpectrumReport {
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        gap,
        ground_rayleigh,
        clamped_nodes: info.clamped_nodes,
        nnz: info.nnz,
        dims: info.grid.dims,
        half_widths: info.grid.half_widths,
        spacings: info.grid.spacings,
        matvecs: pairs.matvecs,
    })
}
