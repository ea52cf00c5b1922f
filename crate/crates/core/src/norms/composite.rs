//! Composite homogeneous norms K = B·ζ(Ñ/B) built from two norms and a
//! positive scalar function ζ. With r = Ñ/B:
//!   ∇K = (ζ − rζ′)∇B + ζ′∇Ñ
//!   ΔK = (ζ − rζ′)ΔB + ζ″(1/B)|∇Ñ − r∇B|² + ζ′ΔÑ
//! The geometric mean B^{1−α}Ñ^{α} is the root case ζ(r) = r^α.

use serde::{Deserialize, Serialize};

use crate::calc::DerivativeBundle;
use crate::error::{Error, Result};

/// Scalar shape function with first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Zeta {
    /// ζ ≡ 1: K = B.
    One,
    /// ζ(r) = r^α: the geometric mean B^{1−α}Ñ^{α}.
    Root { alpha: f64 },
    /// ζ(r) = (1−α) + αr: the convex mixture (1−α)B + αÑ.
    Affine { alpha: f64 },
}

impl Zeta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Zeta::One => Ok(()),
            Zeta::Root { alpha } | Zeta::Affine { alpha } => {
                if *alpha > 0.0 && *alpha < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        context: format!("zeta alpha must lie in (0, 1), got {alpha}"),
                    })
                }
            }
        }
    }

    pub fn eval2(&self, r: f64) -> (f64, f64, f64) {
        match self {
            Zeta::One => (1.0, 0.0, 0.0),
            Zeta::Root { alpha } => {
                let a = *alpha;
                (r.powf(a), a * r.powf(a - 1.0), a * (a - 1.0) * r.powf(a - 2.0))
            }
            Zeta::Affine { alpha } => ((1.0 - alpha) + alpha * r, *alpha, 0.0),
        }
    }
}

pub(crate) fn value(base: f64, other: f64, zeta: &Zeta) -> f64 {
    if base == 0.0 {
        // Both norms vanish only at the origin, where K = 0 as well.
        return 0.0;
    }
    base * zeta.eval2(other / base).0
}

pub(crate) fn bundle(
    base: &DerivativeBundle,
    other: &DerivativeBundle,
    zeta: &Zeta,
) -> Result<DerivativeBundle> {
    if base.value <= 0.0 {
        return Err(Error::OriginSingularity);
    }
    let r = other.value / base.value;
    let (zv, z1, z2) = zeta.eval2(r);
    let c = zv - r * z1;
    let grad: Vec<f64> =
        base.grad.iter().zip(&other.grad).map(|(b, o)| c * b + z1 * o).collect();
    let diff_sq: f64 = base
        .grad
        .iter()
        .zip(&other.grad)
        .map(|(b, o)| {
            let d = o - r * b;
            d * d
        })
        .sum();
    let laplacian = c * base.laplacian + z2 * diff_sq / base.value + z1 * other.laplacian;
    Ok(DerivativeBundle::new(base.value * zv, grad, laplacian))
}
