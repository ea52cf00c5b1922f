//! Empirical coercivity diagnostics on chain output, plus the independent
//! marginal-quadrature oracle used to validate the sampler.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exec::chunk_map;
use crate::group::GroupPoint;
use crate::taming::EnergyModel;

use super::mala::ChainSamples;

/// Test functions with closed-form horizontal gradients.
#[derive(Debug, Clone, Serialize)]
pub enum TestFunction {
    Constant,
    HorizontalCoord { i: usize },
    CenterCoord { k: usize },
    /// cap·tanh(x_i/cap): a smooth clip of a horizontal coordinate.
    ClippedHorizontal { i: usize, cap: f64 },
    /// cap·tanh(z_k/cap).
    ClippedCenter { k: usize, cap: f64 },
    /// cap·tanh(N/cap): a smooth version of N ∧ cap.
    NormCapped { cap: f64 },
    ExpNegNorm,
    /// exp(g/2) with g = cap·tanh(tN²/cap): the dilating family probing
    /// log-Sobolev failure as t grows.
    DilatedExpNormSq { t: f64, cap: f64 },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant => "constant".into(),
            TestFunction::HorizontalCoord { i } => format!("x{}", i + 1),
            TestFunction::CenterCoord { k } => format!("z{}", k + 1),
            TestFunction::ClippedHorizontal { i, cap } => format!("clip(x{},{cap})", i + 1),
            TestFunction::ClippedCenter { k, cap } => format!("clip(z{},{cap})", k + 1),
            TestFunction::NormCapped { cap } => format!("min(N,{cap})"),
            TestFunction::ExpNegNorm => "exp(-N)".into(),
            TestFunction::DilatedExpNormSq { t, .. } => format!("exp({t}N²/2)"),
        }
    }

    /// Default diagnostic set for a group of the given dimensions.
    pub fn default_set(n: usize, m: usize) -> Vec<TestFunction> {
        let mut fns = vec![TestFunction::Constant];
        for i in 0..n.min(2) {
            fns.push(TestFunction::HorizontalCoord { i });
            fns.push(TestFunction::ClippedHorizontal { i, cap: 5.0 });
        }
        for k in 0..m.min(1) {
            fns.push(TestFunction::CenterCoord { k });
            fns.push(TestFunction::ClippedCenter { k, cap: 5.0 });
        }
        fns.push(TestFunction::NormCapped { cap: 10.0 });
        fns.push(TestFunction::ExpNegNorm);
        fns
    }

    pub fn value(&self, model: &EnergyModel, p: &GroupPoint) -> Result<f64> {
        Ok(match self {
            TestFunction::Constant => 1.0,
            TestFunction::HorizontalCoord { i } => p.x[*i],
            TestFunction::CenterCoord { k } => p.z[*k],
            TestFunction::ClippedHorizontal { i, cap } => cap * (p.x[*i] / cap).tanh(),
            TestFunction::ClippedCenter { k, cap } => cap * (p.z[*k] / cap).tanh(),
            TestFunction::NormCapped { cap } => {
                let nv = model.norm.value(&model.group, p)?;
                cap * (nv / cap).tanh()
            }
            TestFunction::ExpNegNorm => (-model.norm.value(&model.group, p)?).exp(),
            TestFunction::DilatedExpNormSq { t, cap } => {
                let nv = model.norm.value(&model.group, p)?;
                (0.5 * cap * (t * nv * nv / cap).tanh()).exp()
            }
        })
    }

    pub fn grad_sq(&self, model: &EnergyModel, p: &GroupPoint) -> Result<f64> {
        let sech2 = |t: f64| {
            let c = t.cosh();
            1.0 / (c * c)
        };
        Ok(match self {
            TestFunction::Constant => 0.0,
            TestFunction::HorizontalCoord { .. } => 1.0,
            TestFunction::CenterCoord { k } => {
                let lx = model.group.lambda_apply(*k, &p.x);
                0.25 * lx.iter().map(|v| v * v).sum::<f64>()
            }
            TestFunction::ClippedHorizontal { i, cap } => {
                let d = sech2(p.x[*i] / cap);
                d * d
            }
            TestFunction::ClippedCenter { k, cap } => {
                let d = sech2(p.z[*k] / cap);
                let lx = model.group.lambda_apply(*k, &p.x);
                d * d * 0.25 * lx.iter().map(|v| v * v).sum::<f64>()
            }
            TestFunction::NormCapped { cap } => {
                let b = model.norm.bundle(&model.group, p)?;
                let d = sech2(b.value / cap);
                d * d * b.grad_norm_sq()
            }
            TestFunction::ExpNegNorm => {
                let b = model.norm.bundle(&model.group, p)?;
                (-2.0 * b.value).exp() * b.grad_norm_sq()
            }
            TestFunction::DilatedExpNormSq { t, cap } => {
                let b = model.norm.bundle(&model.group, p)?;
                let nv = b.value;
                let f = (0.5 * cap * (t * nv * nv / cap).tanh()).exp();
                let dg = sech2(t * nv * nv / cap) * t * nv;
                f * f * dg * dg * b.grad_norm_sq()
            }
        })
    }
}

/// Per-function empirical ratio row.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub name: String,
    pub numerator: f64,
    pub dirichlet: f64,
    pub ratio: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
    pub worst_ratio: f64,
}

fn ratio_report<FNum>(
    model: &EnergyModel,
    samples: &ChainSamples,
    fns: &[TestFunction],
    numerator: FNum,
) -> Result<RatioReport>
where
    FNum: Fn(&[f64]) -> f64,
{
    if samples.is_empty() {
        return Err(Error::EmptySample { context: "chain produced no post-burn-in samples".into() });
    }
    let mut rows = Vec::with_capacity(fns.len());
    let mut worst: f64 = 0.0;
    for f in fns {
        let mut values = Vec::with_capacity(samples.len());
        let mut dirichlet = 0.0;
        for p in samples.iter_points() {
            values.push(f.value(model, &p)?);
            dirichlet += f.grad_sq(model, &p)?;
        }
        dirichlet /= samples.len() as f64;
        let num = numerator(&values);
        let skipped = dirichlet < 1e-14;
        let ratio = if skipped { f64::NAN } else { num / dirichlet };
        if !skipped {
            worst = worst.max(ratio);
        }
        rows.push(RatioRow { name: f.name(), numerator: num, dirichlet, ratio, skipped });
    }
    Ok(RatioReport { rows, worst_ratio: worst })
}

/// Var(f) / μ|∇f|² per test function; the worst ratio is the empirical
/// Poincaré constant seen by this test set.
pub fn empirical_poincare(
    model: &EnergyModel,
    samples: &ChainSamples,
    fns: &[TestFunction],
) -> Result<RatioReport> {
    ratio_report(model, samples, fns, |values| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    })
}

/// Ent(f²) / μ|∇f|² per test function.
pub fn empirical_logsobolev(
    model: &EnergyModel,
    samples: &ChainSamples,
    fns: &[TestFunction],
) -> Result<RatioReport> {
    ratio_report(model, samples, fns, |values| {
        let n = values.len() as f64;
        let mut mean_sq = 0.0;
        let mut mean_sq_log = 0.0;
        for v in values {
            let f2 = v * v;
            mean_sq += f2;
            if f2 > 0.0 {
                mean_sq_log += f2 * f2.ln();
            }
        }
        mean_sq /= n;
        mean_sq_log /= n;
        if mean_sq <= 0.0 {
            0.0
        } else {
            mean_sq_log - mean_sq * mean_sq.ln()
        }
    })
}

/// Equiprobable bin edges of the norm marginal, computed by quadrature:
/// the Lebesgue decomposition dλ = R^{Q−1} dR dς(θ) reduces the marginal to a
/// one-dimensional integral of the cone-shell average of e^{−U(δ_R θ)}.
#[derive(Debug, Clone, Serialize)]
pub struct MarginalBins {
    pub edges: Vec<f64>,
    pub bins: usize,
}

pub fn norm_marginal_bins(
    model: &EnergyModel,
    bins: usize,
    theta_count: usize,
    seed: u64,
) -> Result<MarginalBins> {
    if bins < 2 {
        return Err(Error::InvalidParameter { context: "need at least 2 bins".into() });
    }
    let thetas = crate::norms::cone_sample_unit_shell(&model.group, &model.norm, theta_count, seed)?;
    let q = model.group.homogeneous_dimension() as f64;

    // Coarse pass: locate the support of R^{Q−1}·mean_θ e^{−U(δ_Rθ)}.
    let log_density = |r: f64| -> f64 {
        let mut max_lw = f64::NEG_INFINITY;
        let mut lws = Vec::with_capacity(thetas.len());
        for th in &thetas {
            let p = model.group.dilate(th, r).expect("positive radius");
            let u = model.energy(&p).unwrap_or(f64::INFINITY);
            let lw = -u;
            lws.push(lw);
            max_lw = max_lw.max(lw);
        }
        if !max_lw.is_finite() {
            return f64::NEG_INFINITY;
        }
        let mean: f64 = lws.iter().map(|lw| (lw - max_lw).exp()).sum::<f64>() / lws.len() as f64;
        (q - 1.0) * r.ln() + max_lw + mean.ln()
    };

    let coarse: Vec<f64> = (0..160).map(|i| 10f64.powf(-2.0 + 3.5 * i as f64 / 159.0)).collect();
    let coarse_ld: Vec<f64> = chunk_map(coarse.len(), |i| log_density(coarse[i]));
    let (imax, &lmax) = coarse_ld
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or_else(|| Error::EmptySample { context: "marginal quadrature".into() })?;
    if !lmax.is_finite() {
        return Err(Error::EvaluationFailure { context: "marginal density vanished everywhere scanned".into() });
    }
    let mut lo = coarse[0];
    let mut hi = *coarse.last().unwrap();
    for i in (0..=imax).rev() {
        if coarse_ld[i] < lmax - 46.0 {
            lo = coarse[i];
            break;
        }
    }
    for i in imax..coarse.len() {
        if coarse_ld[i] < lmax - 46.0 {
            hi = coarse[i];
            break;
        }
    }

    // Fine pass: trapezoid CDF on a uniform grid, then quantile edges.
    let fine_n = 4001;
    let hgrid = (hi - lo) / (fine_n - 1) as f64;
    let fine_ld: Vec<f64> =
        chunk_map(fine_n, |i| log_density(lo + i as f64 * hgrid));
    let dens: Vec<f64> = fine_ld.iter().map(|ld| (ld - lmax).exp()).collect();
    let mut cdf = vec![0.0; fine_n];
    for i in 1..fine_n {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i - 1] + dens[i]) * hgrid;
    }
    let total = cdf[fine_n - 1];
    if !(total > 0.0) {
        return Err(Error::EvaluationFailure { context: "marginal mass is zero on the scanned window".into() });
    }
    let mut edges = Vec::with_capacity(bins - 1);
    let mut idx = 0;
    for b in 1..bins {
        let target = total * b as f64 / bins as f64;
        while idx + 1 < fine_n && cdf[idx + 1] < target {
            idx += 1;
        }
        // Linear interpolation inside the bracketing cell.
        let t = (target - cdf[idx]) / (cdf[idx + 1] - cdf[idx]).max(1e-300);
        edges.push(lo + (idx as f64 + t) * hgrid);
    }
    Ok(MarginalBins { edges, bins })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub observed: Vec<usize>,
    pub expected: f64,
}

/// Pearson chi-square of the chain's norm marginal against equiprobable
/// quadrature bins.
pub fn chain_norm_chi_square(
    model: &EnergyModel,
    samples: &ChainSamples,
    bins: &MarginalBins,
) -> Result<ChiSquareReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample { context: "chi-square needs chain samples".into() });
    }
    let mut observed = vec![0usize; bins.bins];
    for p in samples.iter_points() {
        let nv = model.norm.value(&model.group, &p)?;
        let slot = bins.edges.partition_point(|&e| e < nv);
        observed[slot] += 1;
    }
    let expected = samples.len() as f64 / bins.bins as f64;
    let statistic: f64 =
        observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dof = bins.bins - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    let p_value = 1.0 - dist.cdf(statistic);
    Ok(ChiSquareReport { statistic, dof, p_value, observed, expected })
}
