//! Kaplan norm on the generalized Heisenberg group:
//!   N = (G² + 16z²)^{1/4},   G = Σ_k 2|L_k|(x_k² + x_{k+n}²).
//!
//! The horizontal derivatives follow by direct differentiation through the
//! frame X_j = ∂_{x_j} − L_j x_{j+n}∂_z, X_{j+n} = ∂_{x_{j+n}} + L_j x_j ∂_z:
//!   X_j N       = (2|L_j| x_j G − 8 L_j x_{j+n} z) / N³
//!   X_{j+n} N   = (2|L_j| x_{j+n} G + 8 L_j x_j z) / N³
//!   |∇N|²       = 4 Σ_k L_k²(x_k² + x_{k+n}²) / N²
//!   ΔN          = 4(H + G Σ_k|L_k|) / N³,   H = Σ_k L_k²(x_k² + x_{k+n}²)
//!   x·∇N        = G²/N³ ≥ 0
//! For equal |L_k| these satisfy the Kaplan identity ΔN = (Q−1)|∇N|²/N; for
//! unequal magnitudes the identity genuinely fails, which the residual check
//! makes visible.

use crate::calc::DerivativeBundle;
use crate::error::{Error, Result};
use crate::group::{GroupPoint, Step2Group};

pub(crate) fn check_group(l: &[f64], g: &Step2Group) -> Result<()> {
    let matches = g
        .gh_params()
        .map(|p| p.l.len() == l.len() && p.l.iter().zip(l).all(|(a, b)| a == b))
        .unwrap_or(false);
    if !matches {
        return Err(Error::DimensionMismatch {
            context: "Kaplan norm couplings do not match a generalized Heisenberg group".into(),
        });
    }
    Ok(())
}

fn big_g(l: &[f64], x: &[f64]) -> f64 {
    let pairs = l.len();
    l.iter()
        .enumerate()
        .map(|(k, lk)| 2.0 * lk.abs() * (x[k] * x[k] + x[k + pairs] * x[k + pairs]))
        .sum()
}

pub(crate) fn value(l: &[f64], p: &GroupPoint) -> f64 {
    let g = big_g(l, &p.x);
    let z = p.z[0];
    (g * g + 16.0 * z * z).sqrt().sqrt()
}

pub(crate) fn bundle(l: &[f64], group: &Step2Group, p: &GroupPoint) -> Result<DerivativeBundle> {
    check_group(l, group)?;
    if p.is_origin() {
        return Err(Error::OriginSingularity);
    }
    let pairs = l.len();
    let z = p.z[0];
    let g = big_g(l, &p.x);
    let nval = (g * g + 16.0 * z * z).sqrt().sqrt();
    let n3 = nval * nval * nval;

    let mut grad = vec![0.0; 2 * pairs];
    let mut h = 0.0;
    let mut abs_sum = 0.0;
    for (k, &lk) in l.iter().enumerate() {
        let (xa, xb) = (p.x[k], p.x[k + pairs]);
        grad[k] = (2.0 * lk.abs() * xa * g - 8.0 * lk * xb * z) / n3;
        grad[k + pairs] = (2.0 * lk.abs() * xb * g + 8.0 * lk * xa * z) / n3;
        h += lk * lk * (xa * xa + xb * xb);
        abs_sum += lk.abs();
    }
    let laplacian = 4.0 * (h + g * abs_sum) / n3;
    Ok(DerivativeBundle::new(nval, grad, laplacian))
}

/// Σ_k (2L_k)²(x_k² + x_{k+n}²) / N², the closed aggregate for |∇N|².
pub fn grad_norm_sq_identity(l: &[f64], p: &GroupPoint) -> f64 {
    let pairs = l.len();
    let nval = value(l, p);
    let h: f64 = l
        .iter()
        .enumerate()
        .map(|(k, lk)| lk * lk * (p.x[k] * p.x[k] + p.x[k + pairs] * p.x[k + pairs]))
        .sum();
    4.0 * h / (nval * nval)
}

/// G²/N³, the closed aggregate for x·∇N (nonnegative by construction).
pub fn radial_identity(l: &[f64], p: &GroupPoint) -> f64 {
    let g = big_g(l, &p.x);
    let nval = value(l, p);
    g * g / (nval * nval * nval)
}
