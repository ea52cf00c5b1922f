//! Homogeneous norm families with closed-form derivative bundles, plus the
//! sampling machinery used to estimate their structure constants.
//!
//! All norms here are homogeneous of degree 1 under δ_λ(x, z) = (λx, λ²z) and
//! positive off the origin. Level-set sampling exploits exact homogeneity:
//! a direction u with N(u) = v lands on {N = 1} via δ_{1/v}, and degree-0
//! quantities measured there are global.

mod composite;
mod kaplan_gh;
mod type2;

pub use composite::Zeta;
pub use kaplan_gh::{grad_norm_sq_identity, radial_identity};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calc::DerivativeBundle;
use crate::error::{Error, Result};
use crate::exec::{chunk_map, substream};
use crate::group::{GroupPoint, Step2Group};

/// Relative radius of the excluded tube around {x = 0} on unit shells.
pub const TUBE_EXCLUSION: f64 = 1e-6;

/// A homogeneous norm family with closed-form value, horizontal gradient, and
/// sub-Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    /// N = (|x|⁴ + a|z|²)^{1/4}.
    TypeTwoSmooth { a: f64 },
    /// Ñ = ((|x|⁴ + a|z|²)^{1/2} + |x|²)^{1/2}.
    TypeTwoAugmented { a: f64 },
    /// Kaplan norm of the generalized Heisenberg group with couplings L.
    KaplanGeneralizedHeisenberg { l: Vec<f64> },
    /// K = B·ζ(Ñ/B) for two norms B (base) and Ñ (other).
    Perspective { base: Box<NormSpec>, other: Box<NormSpec>, zeta: Zeta },
    /// K = B^{1−α}Ñ^{α}; sugar for the root-ζ perspective composite.
    GeometricMean { base: Box<NormSpec>, other: Box<NormSpec>, alpha: f64 },
}

impl NormSpec {
    pub fn type2(a: f64) -> Self {
        NormSpec::TypeTwoSmooth { a }
    }

    pub fn type2_augmented(a: f64) -> Self {
        NormSpec::TypeTwoAugmented { a }
    }

    pub fn kaplan_gh(l: Vec<f64>) -> Self {
        NormSpec::KaplanGeneralizedHeisenberg { l }
    }

    /// Short label used in reports and CSV tables.
    pub fn label(&self) -> String {
        match self {
            NormSpec::TypeTwoSmooth { a } => format!("type2(a={a})"),
            NormSpec::TypeTwoAugmented { a } => format!("type2aug(a={a})"),
            NormSpec::KaplanGeneralizedHeisenberg { .. } => "kaplan_gh".to_string(),
            NormSpec::Perspective { zeta, .. } => format!("perspective({zeta:?})"),
            NormSpec::GeometricMean { alpha, .. } => format!("geomean(alpha={alpha})"),
        }
    }

    pub fn validate_for(&self, g: &Step2Group) -> Result<()> {
        match self {
            NormSpec::TypeTwoSmooth { a } | NormSpec::TypeTwoAugmented { a } => {
                if *a > 0.0 && a.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter { context: format!("norm parameter a must be positive, got {a}") })
                }
            }
            NormSpec::KaplanGeneralizedHeisenberg { l } => kaplan_gh::check_group(l, g),
            NormSpec::Perspective { base, other, zeta } => {
                zeta.validate()?;
                base.validate_for(g)?;
                other.validate_for(g)
            }
            NormSpec::GeometricMean { base, other, alpha } => {
                Zeta::Root { alpha: *alpha }.validate()?;
                base.validate_for(g)?;
                other.validate_for(g)
            }
        }
    }

    /// Norm value; defined everywhere, 0 exactly at the origin.
    pub fn value(&self, g: &Step2Group, p: &GroupPoint) -> Result<f64> {
        match self {
            NormSpec::TypeTwoSmooth { a } => Ok(type2::value(*a, p)),
            NormSpec::TypeTwoAugmented { a } => Ok(type2::augmented_value(*a, p)),
            NormSpec::KaplanGeneralizedHeisenberg { l } => {
                kaplan_gh::check_group(l, g)?;
                Ok(kaplan_gh::value(l, p))
            }
            NormSpec::Perspective { base, other, zeta } => {
                Ok(composite::value(base.value(g, p)?, other.value(g, p)?, zeta))
            }
            NormSpec::GeometricMean { base, other, alpha } => Ok(composite::value(
                base.value(g, p)?,
                other.value(g, p)?,
                &Zeta::Root { alpha: *alpha },
            )),
        }
    }

    /// Value, horizontal gradient, and sub-Laplacian. Errors at the origin.
    pub fn bundle(&self, g: &Step2Group, p: &GroupPoint) -> Result<DerivativeBundle> {
        match self {
            NormSpec::TypeTwoSmooth { a } => type2::bundle(g, *a, p),
            NormSpec::TypeTwoAugmented { a } => type2::augmented_bundle(g, *a, p),
            NormSpec::KaplanGeneralizedHeisenberg { l } => kaplan_gh::bundle(l, g, p),
            NormSpec::Perspective { base, other, zeta } => {
                composite::bundle(&base.bundle(g, p)?, &other.bundle(g, p)?, zeta)
            }
            NormSpec::GeometricMean { base, other, alpha } => composite::bundle(
                &base.bundle(g, p)?,
                &other.bundle(g, p)?,
                &Zeta::Root { alpha: *alpha },
            ),
        }
    }
}

/// Residual of the Kaplan identity: ΔN − (Q−1)|∇N|²/N.
pub fn kaplan_residual(g: &Step2Group, spec: &NormSpec, p: &GroupPoint) -> Result<f64> {
    let b = spec.bundle(g, p)?;
    let q = g.homogeneous_dimension() as f64;
    Ok(b.laplacian - (q - 1.0) * b.grad_norm_sq() / b.value)
}

/// Relative homogeneity defect |N(δ_λp) − λN(p)| / (λN(p)).
pub fn homogeneity_residual(g: &Step2Group, spec: &NormSpec, p: &GroupPoint, lambda: f64) -> Result<f64> {
    let v = spec.value(g, p)?;
    let vd = spec.value(g, &g.dilate(p, lambda)?)?;
    Ok((vd - lambda * v).abs() / (lambda * v))
}

/// Points on the unit level set {N = 1}, with the singular tube |x| < 1e−6
/// removed and the removal counted.
#[derive(Debug, Clone)]
pub struct ShellSample {
    pub points: Vec<GroupPoint>,
    pub requested: usize,
    pub tube_excluded: usize,
}

impl ShellSample {
    pub fn excluded_fraction(&self) -> f64 {
        self.tube_excluded as f64 / self.requested.max(1) as f64
    }
}

fn random_direction(g: &Step2Group, rng: &mut impl Rng) -> GroupPoint {
    loop {
        let x: Vec<f64> = (0..g.horizontal_dim()).map(|_| rng.sample(StandardNormal)).collect();
        let z: Vec<f64> = (0..g.center_dim()).map(|_| rng.sample(StandardNormal)).collect();
        let p = GroupPoint::new(x, z);
        if p.euclid_norm() > 1e-12 {
            return p;
        }
    }
}

const SHELL_CHUNK: usize = 1024;

/// Draw `count` points on {N = 1} by scaling sphere-uniform directions with
/// the exact dilation factor 1/N(u).
pub fn sample_unit_shell(
    g: &Step2Group,
    spec: &NormSpec,
    count: usize,
    seed: u64,
) -> Result<ShellSample> {
    spec.validate_for(g)?;
    let chunks = count.div_ceil(SHELL_CHUNK);
    let parts: Vec<(Vec<GroupPoint>, usize)> = chunk_map(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let take = SHELL_CHUNK.min(count - c * SHELL_CHUNK);
        let mut pts = Vec::with_capacity(take);
        let mut excluded = 0;
        for _ in 0..take {
            let u = random_direction(g, &mut rng);
            let v = spec.value(g, &u).expect("norm value is total off the origin");
            let theta = g.dilate(&u, 1.0 / v).expect("positive scale");
            if theta.x_norm() < TUBE_EXCLUSION {
                excluded += 1;
            } else {
                pts.push(theta);
            }
        }
        (pts, excluded)
    });
    let mut points = Vec::with_capacity(count);
    let mut tube_excluded = 0;
    for (pts, excl) in parts {
        points.extend(pts);
        tube_excluded += excl;
    }
    if points.is_empty() {
        return Err(Error::EmptySample { context: "unit shell sample".into() });
    }
    Ok(ShellSample { points, requested: count, tube_excluded })
}

/// Draw `count` points distributed by the cone measure on {N = 1}: uniform
/// rejection sampling inside {N ≤ 1} followed by projection δ_{1/N}.
/// This is the measure for which Lebesgue factorizes as R^{Q−1} dR dς(θ).
pub fn cone_sample_unit_shell(
    g: &Step2Group,
    spec: &NormSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<GroupPoint>> {
    spec.validate_for(g)?;
    // Bounding box of {N ≤ 1} from a direction scan.
    let scan = sample_unit_shell(g, spec, 4096, seed ^ 0xB0B0)?;
    let mut rx: f64 = 0.0;
    let mut rz: f64 = 0.0;
    for p in &scan.points {
        rx = rx.max(p.x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        rz = rz.max(p.z.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    let (rx, rz) = (rx * 1.05, rz * 1.05 + 1e-12);
    let chunks = count.div_ceil(SHELL_CHUNK);
    let parts: Vec<Vec<GroupPoint>> = chunk_map(chunks, |c| {
        let mut rng = substream(seed, 0x1000_0000 + c as u64);
        let take = SHELL_CHUNK.min(count - c * SHELL_CHUNK);
        let mut pts = Vec::with_capacity(take);
        while pts.len() < take {
            let x: Vec<f64> = (0..g.horizontal_dim()).map(|_| rng.random_range(-rx..rx)).collect();
            let z: Vec<f64> = (0..g.center_dim()).map(|_| rng.random_range(-rz..rz)).collect();
            let p = GroupPoint::new(x, z);
            let v = spec.value(g, &p).expect("norm value is total");
            if v > 1e-9 && v <= 1.0 {
                pts.push(g.dilate(&p, 1.0 / v).expect("positive scale"));
            }
        }
        pts
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Empirical extremes of the gradient and Laplacian bound ratios on {N = 1}:
/// A ≤ |∇N|²N²/|x|² ≤ C and |ΔN|N³/|x|² ≤ B.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GradBoundEstimates {
    pub a_est: f64,
    pub c_est: f64,
    pub b_est: f64,
}

/// One sampled row of the bound-ratio table (CSV interface).
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub index: usize,
    pub x_norm: f64,
    pub norm: f64,
    pub grad_ratio: f64,
    pub lap_ratio: f64,
}

pub fn gradient_bound_rows(
    g: &Step2Group,
    spec: &NormSpec,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    let shell = sample_unit_shell(g, spec, sample_size, seed)?;
    let rows: Vec<BoundRow> = shell
        .points
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let b = spec.bundle(g, p).expect("shell points avoid the origin");
            let x2 = p.x_norm() * p.x_norm();
            let n2 = b.value * b.value;
            BoundRow {
                index,
                x_norm: p.x_norm(),
                norm: b.value,
                grad_ratio: b.grad_norm_sq() * n2 / x2,
                lap_ratio: b.laplacian.abs() * n2 * b.value / x2,
            }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySample { context: "gradient bound rows".into() });
    }
    Ok(rows)
}

/// Extremes of the bound ratios over a shell sample; global by homogeneity.
pub fn gradient_bounds(
    g: &Step2Group,
    spec: &NormSpec,
    sample_size: usize,
    seed: u64,
) -> Result<GradBoundEstimates> {
    let rows = gradient_bound_rows(g, spec, sample_size, seed)?;
    let mut a = f64::INFINITY;
    let mut c: f64 = 0.0;
    let mut b: f64 = 0.0;
    for r in &rows {
        a = a.min(r.grad_ratio);
        c = c.max(r.grad_ratio);
        b = b.max(r.lap_ratio);
    }
    Ok(GradBoundEstimates { a_est: a, c_est: c, b_est: b })
}

/// Supremum of |∇N| over the unit shell (degree 0, hence global).
pub fn sup_grad_norm(g: &Step2Group, spec: &NormSpec, sample_size: usize, seed: u64) -> Result<f64> {
    let shell = sample_unit_shell(g, spec, sample_size, seed)?;
    Ok(shell
        .points
        .iter()
        .map(|p| spec.bundle(g, p).expect("off origin").grad_norm())
        .fold(0.0, f64::max))
}

/// Smallest c ≥ 1 with c⁻¹·A ≤ B ≤ c·A, estimated on the unit level set of A.
pub fn equivalence_constant(
    g: &Step2Group,
    spec_a: &NormSpec,
    spec_b: &NormSpec,
    sample_size: usize,
    seed: u64,
) -> Result<f64> {
    spec_b.validate_for(g)?;
    let shell = sample_unit_shell(g, spec_a, sample_size, seed)?;
    let mut c: f64 = 1.0;
    for p in &shell.points {
        let vb = spec_b.value(g, p)?;
        c = c.max(vb).max(1.0 / vb);
    }
    Ok(c)
}

/// sup |∇K − ∇K₀| over the unit level set of K₀ (degree 0, hence global).
pub fn perturbation_gap(
    g: &Step2Group,
    spec_k: &NormSpec,
    spec_k0: &NormSpec,
    sample_size: usize,
    seed: u64,
) -> Result<f64> {
    spec_k.validate_for(g)?;
    let shell = sample_unit_shell(g, spec_k0, sample_size, seed)?;
    let mut sup: f64 = 0.0;
    for p in &shell.points {
        let bk = spec_k.bundle(g, p)?;
        let b0 = spec_k0.bundle(g, p)?;
        let d: f64 = bk
            .grad
            .iter()
            .zip(&b0.grad)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum();
        sup = sup.max(d.sqrt());
    }
    Ok(sup)
}
