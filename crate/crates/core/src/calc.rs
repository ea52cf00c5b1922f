//! Horizontal frame, derivative bundles, and finite-difference oracles.
//!
//! The frame fields are X_i = ∂_{x_i} + ½ Σ_k (Λ⁽ᵏ⁾x)_i ∂_{z_k}. All closed
//! forms in this crate publish a [`DerivativeBundle`] (value, horizontal
//! gradient, sub-Laplacian); the finite-difference routines here are the
//! independent check. FD probes flow along the exact group operation
//! p ∘ (t·e_i, 0), so truncation error comes from the scalar field alone.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::group::{GroupPoint, Step2Group};
use crate::taming::OuterFunction;

/// Value, horizontal gradient (length n), and sub-Laplacian of a scalar at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    pub grad: Vec<f64>,
    pub laplacian: f64,
}

impl DerivativeBundle {
    pub fn new(value: f64, grad: Vec<f64>, laplacian: f64) -> Self {
        Self { value, grad, laplacian }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, grad: vec![0.0; n], laplacian: 0.0 }
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum()
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad_norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.laplacian.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }

    /// Bundle of a·self + b·other (same point, same frame).
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Self {
        let grad = self.grad.iter().zip(&other.grad).map(|(x, y)| a * x + b * y).collect();
        Self { value: a * self.value + b * other.value, grad, laplacian: a * self.laplacian + b * other.laplacian }
    }

    /// Bundle of the product self·other: Δ(fg) = fΔg + 2∇f·∇g + gΔf.
    pub fn product(&self, other: &Self) -> Self {
        let grad = self
            .grad
            .iter()
            .zip(&other.grad)
            .map(|(a, b)| a * other.value + b * self.value)
            .collect();
        let cross: f64 = self.grad.iter().zip(&other.grad).map(|(a, b)| a * b).sum();
        Self {
            value: self.value * other.value,
            grad,
            laplacian: self.laplacian * other.value + 2.0 * cross + other.laplacian * self.value,
        }
    }
}

/// Coefficient matrix of the horizontal frame at p: row i holds the ℝ^{n+m}
/// components of X_i. The x-block is the identity, the (i, k) center entry is
/// ½(Λ⁽ᵏ⁾x)_i.
pub fn frame_at(g: &Step2Group, p: &GroupPoint) -> DMatrix<f64> {
    let n = g.horizontal_dim();
    let m = g.center_dim();
    let mut frame = DMatrix::<f64>::zeros(n, n + m);
    for i in 0..n {
        frame[(i, i)] = 1.0;
    }
    for k in 0..m {
        let lx = g.lambda_apply(k, &p.x);
        for i in 0..n {
            frame[(i, n + k)] = 0.5 * lx[i];
        }
    }
    frame
}

/// Bundle of the outer composition V ∘ f from the bundle of f:
/// ∇(V∘f) = V′∇f, Δ(V∘f) = V′Δf + V″|∇f|².
pub fn chain_rule_bundle(inner: &DerivativeBundle, outer: &OuterFunction) -> Result<DerivativeBundle> {
    let s = inner.value;
    let (v, d1, d2) = outer.eval2(s)?;
    let grad = inner.grad.iter().map(|g| d1 * g).collect();
    Ok(DerivativeBundle {
        value: v,
        grad,
        laplacian: d1 * inner.laplacian + d2 * inner.grad_norm_sq(),
    })
}

/// Default FD step: 1e−4 · max(1, |p|).
pub fn default_fd_step(p: &GroupPoint) -> f64 {
    1e-4 * p.euclid_norm().max(1.0)
}

fn probe<F>(g: &Step2Group, field: &F, p: &GroupPoint, dir: usize, t: f64) -> Result<f64>
where
    F: Fn(&GroupPoint) -> Result<f64>,
{
    let mut h = vec![0.0; g.horizontal_dim()];
    h[dir] = t;
    let q = g.horizontal_translate(p, &h)?;
    let v = field(&q)?;
    if !v.is_finite() {
        return Err(Error::EvaluationFailure {
            context: format!("field not finite at probe offset {t:+e} in direction {dir}"),
        });
    }
    Ok(v)
}

/// Centered finite-difference horizontal gradient along the frame flows.
pub fn fd_subgradient<F>(g: &Step2Group, field: &F, p: &GroupPoint, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&GroupPoint) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter { context: format!("FD step must be positive, got {h}") });
    }
    (0..g.horizontal_dim())
        .map(|i| {
            let fp = probe(g, field, p, i, h)?;
            let fm = probe(g, field, p, i, -h)?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Centered finite-difference sub-Laplacian Σ X_i² along the frame flows.
pub fn fd_sublaplacian<F>(g: &Step2Group, field: &F, p: &GroupPoint, h: f64) -> Result<f64>
where
    F: Fn(&GroupPoint) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter { context: format!("FD step must be positive, got {h}") });
    }
    let f0 = field(p)?;
    if !f0.is_finite() {
        return Err(Error::EvaluationFailure { context: "field not finite at base point".into() });
    }
    let mut acc = 0.0;
    for i in 0..g.horizontal_dim() {
        let fp = probe(g, field, p, i, h)?;
        let fm = probe(g, field, p, i, -h)?;
        acc += (fp - 2.0 * f0 + fm) / (h * h);
    }
    Ok(acc)
}
