//! Closed forms for N = (|x|⁴ + a|z|²)^{1/4} and its augmented variant
//! Ñ = ((|x|⁴ + a|z|²)^{1/2} + |x|²)^{1/2} on a general step-2 group.
//!
//! Writing S = |x|⁴ + a|z|² and Λ_z = Σ_k z_k Λ⁽ᵏ⁾:
//!   ∇S = 4|x|²x + aΛ_z x          (the cross term xᵀΛ_z x vanishes, Λ_z skew)
//!   |∇S|² = 16|x|⁶ + a²|Λ_z x|²
//!   ΔS = (4n + 8)|x|² + (a/2)Σ_k|Λ⁽ᵏ⁾x|²
//! and N = S^{1/4} gives ∇N = ∇S/(4N³), ΔN = ΔS/(4N³) − (3/16)|∇S|²/N⁷.

use crate::calc::DerivativeBundle;
use crate::error::{Error, Result};
use crate::group::{GroupPoint, Step2Group};

pub(crate) fn value(a: f64, p: &GroupPoint) -> f64 {
    let x2: f64 = p.x.iter().map(|v| v * v).sum();
    let z2: f64 = p.z.iter().map(|v| v * v).sum();
    (x2 * x2 + a * z2).sqrt().sqrt()
}

pub(crate) fn bundle(g: &Step2Group, a: f64, p: &GroupPoint) -> Result<DerivativeBundle> {
    if p.is_origin() {
        return Err(Error::OriginSingularity);
    }
    let n = g.horizontal_dim();
    let x2: f64 = p.x.iter().map(|v| v * v).sum();
    let z2: f64 = p.z.iter().map(|v| v * v).sum();
    let s = x2 * x2 + a * z2;
    let nval = s.sqrt().sqrt();
    let n3 = nval * nval * nval;

    let lzx = g.lambda_z_apply(&p.z, &p.x);
    let lzx2: f64 = lzx.iter().map(|v| v * v).sum();
    let grad: Vec<f64> = p
        .x
        .iter()
        .zip(&lzx)
        .map(|(xi, li)| (4.0 * x2 * xi + a * li) / (4.0 * n3))
        .collect();

    let grad_s_sq = 16.0 * x2 * x2 * x2 + a * a * lzx2;
    let mut lam_x_sq = 0.0;
    for k in 0..g.center_dim() {
        let lx = g.lambda_apply(k, &p.x);
        lam_x_sq += lx.iter().map(|v| v * v).sum::<f64>();
    }
    let lap_s = (4.0 * n as f64 + 8.0) * x2 + 0.5 * a * lam_x_sq;
    let laplacian = lap_s / (4.0 * n3) - (3.0 / 16.0) * grad_s_sq / (n3 * n3 * nval);

    Ok(DerivativeBundle::new(nval, grad, laplacian))
}

pub(crate) fn augmented_value(a: f64, p: &GroupPoint) -> f64 {
    let base = value(a, p);
    let x2: f64 = p.x.iter().map(|v| v * v).sum();
    (base * base + x2).sqrt()
}

pub(crate) fn augmented_bundle(g: &Step2Group, a: f64, p: &GroupPoint) -> Result<DerivativeBundle> {
    if p.is_origin() {
        return Err(Error::OriginSingularity);
    }
    let base = bundle(g, a, p)?;
    let x2: f64 = p.x.iter().map(|v| v * v).sum();
    let t = base.value * base.value + x2;
    let aug = t.sqrt();
    // ∇T = 2N∇N + 2x, ΔT = 2NΔN + 2|∇N|² + 2n.
    let grad_t: Vec<f64> = base
        .grad
        .iter()
        .zip(&p.x)
        .map(|(gn, xi)| 2.0 * base.value * gn + 2.0 * xi)
        .collect();
    let lap_t = 2.0 * base.value * base.laplacian
        + 2.0 * base.grad_norm_sq()
        + 2.0 * g.horizontal_dim() as f64;
    let grad_t_sq: f64 = grad_t.iter().map(|v| v * v).sum();
    let grad = grad_t.iter().map(|v| v / (2.0 * aug)).collect();
    let laplacian = lap_t / (2.0 * aug) - grad_t_sq / (4.0 * aug * aug * aug);
    Ok(DerivativeBundle::new(aug, grad, laplacian))
}
