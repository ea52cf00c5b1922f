//! Step-2 Carnot groups in global coordinates (x, z) ∈ ℝⁿ × ℝᵐ.
//!
//! The group law is
//!   (x, z) ∘ (x', z') = (x + x', z_j + z'_j + ½⟨Λ⁽ʲ⁾x, x'⟩)
//! with skew-symmetric, linearly independent matrices Λ⁽ʲ⁾. Dilations act as
//! δ_λ(x, z) = (λx, λ²z), Lebesgue measure is the Haar measure, and the
//! homogeneous dimension is Q = n + 2m.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SKEW_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// A point (x, z) of a step-2 group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        Self { x, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|v| v.is_finite())
    }

    /// Euclidean norm of the horizontal part.
    pub fn x_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the center part.
    pub fn z_norm(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of the full coordinate vector.
    pub fn euclid_norm(&self) -> f64 {
        (self.x.iter().map(|v| v * v).sum::<f64>() + self.z.iter().map(|v| v * v).sum::<f64>())
            .sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0) && self.z.iter().all(|&v| v == 0.0)
    }
}

/// Parameters of the generalized Heisenberg group: one pair of horizontal
/// directions per nonzero coupling constant L_j, center dimension 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedHeisenbergParams {
    pub l: Vec<f64>,
}

impl GeneralizedHeisenbergParams {
    pub fn new(l: Vec<f64>) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::InvalidParameter {
                context: "generalized Heisenberg needs at least one coupling constant".into(),
            });
        }
        if l.iter().any(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter {
                context: "every coupling constant L_j must be nonzero and finite".into(),
            });
        }
        Ok(Self { l })
    }
}

/// A validated step-2 Carnot group.
#[derive(Debug, Clone)]
pub struct Step2Group {
    n: usize,
    m: usize,
    lambdas: Vec<DMatrix<f64>>,
    /// Coupling constants when the group was built as a generalized
    /// Heisenberg expansion; used to pick the matching Kaplan norm.
    gh_params: Option<GeneralizedHeisenbergParams>,
}

impl Step2Group {
    /// Validate and construct a group from its Λ matrices.
    ///
    /// m = 0 (no center, abelian ℝⁿ) is accepted as a degenerate case; it is
    /// used by the spectral box oracle.
    pub fn new(n: usize, m: usize, lambdas: Vec<DMatrix<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                context: "horizontal dimension must be positive".into(),
            });
        }
        if lambdas.len() != m {
            return Err(Error::DimensionMismatch {
                context: format!("expected {m} Λ matrices, got {}", lambdas.len()),
            });
        }
        for (k, lam) in lambdas.iter().enumerate() {
            if lam.nrows() != n || lam.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("Λ({k}) is {}×{}, expected {n}×{n}", lam.nrows(), lam.ncols()),
                });
            }
            let dev = (lam + lam.transpose()).abs().max();
            if dev > SKEW_TOL {
                return Err(Error::SkewSymmetryViolation { index: k, deviation: dev });
            }
        }
        if m > 0 {
            // Rank of the m × n² matrix whose rows are the flattened Λ's.
            let mut flat = DMatrix::<f64>::zeros(m, n * n);
            for (k, lam) in lambdas.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        flat[(k, i * n + j)] = lam[(i, j)];
                    }
                }
            }
            let svals = flat.singular_values();
            let rank = svals.iter().filter(|&&s| s > RANK_TOL).count();
            if rank < m {
                return Err(Error::LinearDependence { rank, expected: m });
            }
        }
        Ok(Self { n, m, lambdas, gh_params: None })
    }

    /// The Heisenberg group: n = 2, m = 1, Λ⁽¹⁾ = [[0, 1], [−1, 0]].
    pub fn heisenberg() -> Self {
        let lam = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        Self::new(2, 1, vec![lam]).expect("heisenberg data is valid")
    }

    /// Expand generalized Heisenberg parameters into a step-2 group.
    ///
    /// The group law t + s + Σ_j L_j (x_j y_{j+n} − y_j x_{j+n}) matches the
    /// step-2 law with Λ_{j,j+n} = −2L_j and Λ_{j+n,j} = 2L_j, so that the
    /// horizontal fields are X_j = ∂_{x_j} − L_j x_{j+n} ∂_z and
    /// X_{j+n} = ∂_{x_{j+n}} + L_j x_j ∂_z.
    pub fn generalized_heisenberg(params: GeneralizedHeisenbergParams) -> Result<Self> {
        let pairs = params.l.len();
        let n = 2 * pairs;
        let mut lam = DMatrix::<f64>::zeros(n, n);
        for (j, &lj) in params.l.iter().enumerate() {
            lam[(j, j + pairs)] = -2.0 * lj;
            lam[(j + pairs, j)] = 2.0 * lj;
        }
        let mut g = Self::new(n, 1, vec![lam])?;
        g.gh_params = Some(params);
        Ok(g)
    }

    /// Abelian ℝⁿ (no center). Degenerate but convenient for oracles.
    pub fn abelian(n: usize) -> Result<Self> {
        Self::new(n, 0, Vec::new())
    }

    pub fn horizontal_dim(&self) -> usize {
        self.n
    }

    pub fn center_dim(&self) -> usize {
        self.m
    }

    /// Homogeneous dimension Q = n + 2m, forced by the dilation weights.
    pub fn homogeneous_dimension(&self) -> usize {
        self.n + 2 * self.m
    }

    pub fn lambdas(&self) -> &[DMatrix<f64>] {
        &self.lambdas
    }

    pub fn gh_params(&self) -> Option<&GeneralizedHeisenbergParams> {
        self.gh_params.as_ref()
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::new(vec![0.0; self.n], vec![0.0; self.m])
    }

    pub fn contains(&self, p: &GroupPoint) -> bool {
        p.x.len() == self.n && p.z.len() == self.m && p.is_finite()
    }

    fn check_point(&self, p: &GroupPoint, role: &str) -> Result<()> {
        if p.x.len() != self.n || p.z.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{role} has dims ({}, {}), group expects ({}, {})",
                    p.x.len(),
                    p.z.len(),
                    self.n,
                    self.m
                ),
            });
        }
        Ok(())
    }

    /// (Λ⁽ᵏ⁾ x)_i for all i.
    pub fn lambda_apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let lam = &self.lambdas[k];
        (0..self.n).map(|i| (0..self.n).map(|l| lam[(i, l)] * x[l]).sum()).collect()
    }

    /// (Σ_k z_k Λ⁽ᵏ⁾ x)_i for all i.
    pub fn lambda_z_apply(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, lam) in self.lambdas.iter().enumerate() {
            let zk = z[k];
            if zk == 0.0 {
                continue;
            }
            for i in 0..self.n {
                let mut acc = 0.0;
                for l in 0..self.n {
                    acc += lam[(i, l)] * x[l];
                }
                out[i] += zk * acc;
            }
        }
        out
    }

    /// Group product p ∘ q.
    pub fn compose(&self, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(p, "left factor")?;
        self.check_point(q, "right factor")?;
        let x: Vec<f64> = p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect();
        let mut z = Vec::with_capacity(self.m);
        for (k, lam) in self.lambdas.iter().enumerate() {
            let mut bilin = 0.0;
            for i in 0..self.n {
                let mut row = 0.0;
                for l in 0..self.n {
                    row += lam[(i, l)] * p.x[l];
                }
                bilin += row * q.x[i];
            }
            z.push(p.z[k] + q.z[k] + 0.5 * bilin);
        }
        Ok(GroupPoint::new(x, z))
    }

    /// Group inverse; (−x, −z) because ⟨Λx, x⟩ = 0 for skew Λ.
    pub fn invert(&self, p: &GroupPoint) -> GroupPoint {
        GroupPoint::new(p.x.iter().map(|v| -v).collect(), p.z.iter().map(|v| -v).collect())
    }

    /// Anisotropic dilation δ_λ(x, z) = (λx, λ²z).
    pub fn dilate(&self, p: &GroupPoint, scale: f64) -> Result<GroupPoint> {
        if !(scale > 0.0) {
            return Err(Error::NonpositiveScale { scale });
        }
        self.check_point(p, "point")?;
        Ok(GroupPoint::new(
            p.x.iter().map(|v| scale * v).collect(),
            p.z.iter().map(|v| scale * scale * v).collect(),
        ))
    }

    /// Flow along the horizontal frame: p ∘ (h, 0).
    ///
    /// For step-2 groups this is exact and equals p + Σ h_i X_i(p), which is
    /// what makes finite differences along frame directions clean.
    pub fn horizontal_translate(&self, p: &GroupPoint, h: &[f64]) -> Result<GroupPoint> {
        let q = GroupPoint::new(h.to_vec(), vec![0.0; self.m]);
        self.compose(p, &q)
    }
}
