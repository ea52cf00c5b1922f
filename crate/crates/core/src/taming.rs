//! Energy construction U and the coercivity potential V₂ = ¼|∇U|² − ½ΔU.
//!
//! Three ways of injecting a singularity ξ(|x|) into a smooth-norm energy:
//! additively (U = V(βN + ξ)), multiplicatively inside the argument
//! (U = V(ξN)), and as a prefactor (U = (1 + ξ̃)V(N)). The singular factor
//! depends on the horizontal coordinates only, so its sub-Riemannian
//! derivatives coincide with the Euclidean ones in x.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calc::{chain_rule_bundle, default_fd_step, fd_subgradient, fd_sublaplacian, DerivativeBundle};
use crate::error::{Error, Result};
use crate::exec::{chunk_map, substream};
use crate::group::{GroupPoint, Step2Group};
use crate::norms::NormSpec;

/// Outer profile V applied to the (tamed) norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterFunction {
    /// V(s) = s^p.
    Power { p: f64 },
}

impl OuterFunction {
    pub fn power(p: f64) -> Self {
        OuterFunction::Power { p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OuterFunction::Power { p } => {
                if p.is_finite() && *p >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter { context: format!("power exponent must be ≥ 0, got {p}") })
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            OuterFunction::Power { p } => format!("power({p})"),
        }
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        self.eval2(s).map(|(v, _, _)| v)
    }

    /// (V, V′, V″) at s. Fractional powers are only differentiable for s > 0.
    pub fn eval2(&self, s: f64) -> Result<(f64, f64, f64)> {
        match self {
            OuterFunction::Power { p } => {
                let p = *p;
                if p == 0.0 {
                    return Ok((1.0, 0.0, 0.0));
                }
                if s < 0.0 && p.fract() != 0.0 {
                    return Err(Error::OuterSingularity { at: s });
                }
                if s == 0.0 && p < 2.0 && p != 1.0 {
                    return Err(Error::OuterSingularity { at: s });
                }
                let v = s.powf(p);
                let d1 = p * s.powf(p - 1.0);
                let d2 = if p == 1.0 { 0.0 } else { p * (p - 1.0) * s.powf(p - 2.0) };
                Ok((v, d1, d2))
            }
        }
    }
}

/// Which singularity is injected into the energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TamingSpec {
    /// U = V(N): no taming.
    None,
    /// U = V(βN + |x|^{−σ}).
    AdditivePower { sigma: f64, beta: f64 },
    /// U = V(βN + log(1/|x|)).
    AdditiveLog { beta: f64 },
    /// U = V(|x|^{−σ}·N).
    MultiplicativePower { sigma: f64 },
    /// U = (1 + ξ̃(|x|))·V(N) with ξ(s) = log(e + 1/s) and the quadratic
    /// matching factor ((|x|−l)/(1−l))² switched on at |x| ≥ 1.
    MultiplicativeTwo { l: f64, alpha: f64 },
}

impl TamingSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |context: String| Err(Error::InvalidParameter { context });
        match self {
            TamingSpec::None => Ok(()),
            TamingSpec::AdditivePower { sigma, beta } => {
                if !(*sigma > 0.0) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                if !(*beta > 0.0) {
                    return bad(format!("beta must be positive, got {beta}"));
                }
                Ok(())
            }
            TamingSpec::AdditiveLog { beta } => {
                if !(*beta > 0.0) {
                    return bad(format!("beta must be positive, got {beta}"));
                }
                Ok(())
            }
            TamingSpec::MultiplicativePower { sigma } => {
                if !(*sigma > 0.0) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                Ok(())
            }
            TamingSpec::MultiplicativeTwo { l, alpha } => {
                if !(*l > 0.0 && *l < 1.0) {
                    return bad(format!("l must lie in (0, 1), got {l}"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("alpha must lie in (0, 1), got {alpha}"));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TamingSpec::None => "none".into(),
            TamingSpec::AdditivePower { sigma, beta } => format!("additive_power(sigma={sigma},beta={beta})"),
            TamingSpec::AdditiveLog { beta } => format!("additive_log(beta={beta})"),
            TamingSpec::MultiplicativePower { sigma } => format!("mult_power(sigma={sigma})"),
            TamingSpec::MultiplicativeTwo { l, alpha } => format!("mult2(l={l},alpha={alpha})"),
        }
    }

    /// Does the energy blow up on the tube {x = 0}?
    pub fn is_singular(&self) -> bool {
        !matches!(self, TamingSpec::None)
    }

    /// Value of the singular factor ξ(|x|) (not defined for `None`).
    pub fn xi_value(&self, x_norm: f64) -> f64 {
        match self {
            TamingSpec::None => 0.0,
            TamingSpec::AdditivePower { sigma, .. } | TamingSpec::MultiplicativePower { sigma } => {
                x_norm.powf(-sigma)
            }
            TamingSpec::AdditiveLog { .. } => -x_norm.ln(),
            TamingSpec::MultiplicativeTwo { l, .. } => {
                let xi = (std::f64::consts::E + 1.0 / x_norm).ln();
                if x_norm < 1.0 {
                    xi
                } else {
                    let q = (x_norm - l) / (1.0 - l);
                    q * q * xi
                }
            }
        }
    }

    /// Closed-form bundle of ξ(|x|) in the horizontal calculus. Because ξ has
    /// no z-dependence, the frame derivatives reduce to the Euclidean ones.
    pub fn xi_bundle(&self, n: usize, x: &[f64]) -> Result<DerivativeBundle> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        if r == 0.0 {
            return Err(Error::OriginSingularity);
        }
        let nf = n as f64;
        match self {
            TamingSpec::None => Ok(DerivativeBundle::constant(0.0, n)),
            TamingSpec::AdditivePower { sigma, .. } | TamingSpec::MultiplicativePower { sigma } => {
                let s = *sigma;
                let value = r.powf(-s);
                let coeff = -s * r.powf(-s - 2.0);
                let grad = x.iter().map(|xi| coeff * xi).collect();
                let laplacian = -s * (nf - 2.0 - s) * r.powf(-(2.0 + s));
                Ok(DerivativeBundle::new(value, grad, laplacian))
            }
            TamingSpec::AdditiveLog { .. } => {
                let value = -r.ln();
                let grad = x.iter().map(|xi| -xi / r2).collect();
                let laplacian = -(nf - 2.0) / r2;
                Ok(DerivativeBundle::new(value, grad, laplacian))
            }
            TamingSpec::MultiplicativeTwo { l, .. } => {
                let e = std::f64::consts::E;
                let xi = (e + 1.0 / r).ln();
                let xi1 = -1.0 / ((1.0 + e * r) * r);
                let xi2 = (1.0 + 2.0 * e * r) / ((1.0 + e * r) * (1.0 + e * r) * r2);
                let (value, w1, w2) = if r < 1.0 {
                    (xi, xi1, xi2)
                } else {
                    let d = 1.0 - l;
                    let q = (r - l) * (r - l) / (d * d);
                    let q1 = 2.0 * (r - l) / (d * d);
                    let q2 = 2.0 / (d * d);
                    (q * xi, q1 * xi + q * xi1, q2 * xi + 2.0 * q1 * xi1 + q * xi2)
                };
                let grad = x.iter().map(|xi_c| w1 * xi_c / r).collect();
                let laplacian = w2 + (nf - 1.0) * w1 / r;
                Ok(DerivativeBundle::new(value, grad, laplacian))
            }
        }
    }
}

/// A fully assembled energy: group, norm, taming, outer profile.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub group: Step2Group,
    pub norm: NormSpec,
    pub taming: TamingSpec,
    pub outer: OuterFunction,
}

impl EnergyModel {
    pub fn new(group: Step2Group, norm: NormSpec, taming: TamingSpec, outer: OuterFunction) -> Result<Self> {
        norm.validate_for(&group)?;
        taming.validate()?;
        outer.validate()?;
        Ok(Self { group, norm, taming, outer })
    }

    /// Is p on the singular set of this model (origin, or the tube {x = 0}
    /// for singular tamings)?
    pub fn is_singular_at(&self, p: &GroupPoint) -> bool {
        p.is_origin() || (self.taming.is_singular() && p.x_norm() == 0.0)
    }

    /// Energy value. Singular tamings return +∞ on the tube {x = 0}.
    pub fn energy(&self, p: &GroupPoint) -> Result<f64> {
        let nv = self.norm.value(&self.group, p)?;
        match &self.taming {
            TamingSpec::None => self.outer.eval(nv),
            TamingSpec::AdditivePower { beta, .. } | TamingSpec::AdditiveLog { beta } => {
                let r = p.x_norm();
                if r == 0.0 {
                    return Ok(f64::INFINITY);
                }
                self.outer.eval(beta * nv + self.taming.xi_value(r))
            }
            TamingSpec::MultiplicativePower { .. } => {
                let r = p.x_norm();
                if r == 0.0 {
                    return Ok(f64::INFINITY);
                }
                self.outer.eval(self.taming.xi_value(r) * nv)
            }
            TamingSpec::MultiplicativeTwo { .. } => {
                let r = p.x_norm();
                if r == 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok((1.0 + self.taming.xi_value(r)) * self.outer.eval(nv)?)
            }
        }
    }

    /// Closed-form bundle of U, assembled by chain and product rules from the
    /// norm bundle and the ξ bundle.
    pub fn energy_bundle(&self, p: &GroupPoint) -> Result<DerivativeBundle> {
        if self.is_singular_at(p) {
            return Err(Error::OriginSingularity);
        }
        let n = self.group.horizontal_dim();
        let norm_b = self.norm.bundle(&self.group, p)?;
        match &self.taming {
            TamingSpec::None => chain_rule_bundle(&norm_b, &self.outer),
            TamingSpec::AdditivePower { beta, .. } | TamingSpec::AdditiveLog { beta } => {
                let xi = self.taming.xi_bundle(n, &p.x)?;
                let inner = norm_b.linear_combination(*beta, &xi, 1.0);
                chain_rule_bundle(&inner, &self.outer)
            }
            TamingSpec::MultiplicativePower { .. } => {
                let xi = self.taming.xi_bundle(n, &p.x)?;
                let inner = xi.product(&norm_b);
                chain_rule_bundle(&inner, &self.outer)
            }
            TamingSpec::MultiplicativeTwo { .. } => {
                let xi = self.taming.xi_bundle(n, &p.x)?;
                let prefactor = DerivativeBundle::new(1.0 + xi.value, xi.grad, xi.laplacian);
                let v_of_n = chain_rule_bundle(&norm_b, &self.outer)?;
                Ok(prefactor.product(&v_of_n))
            }
        }
    }

    /// V₂ = ¼|∇U|² − ½ΔU from the closed-form bundle.
    pub fn v2_closed(&self, p: &GroupPoint) -> Result<f64> {
        let u = self.energy_bundle(p)?;
        Ok(0.25 * u.grad_norm_sq() - 0.5 * u.laplacian)
    }

    /// V₂ with the singular-set convention: +∞ on the tube and wherever the
    /// closed form is unavailable.
    pub fn v2_or_infinity(&self, p: &GroupPoint) -> f64 {
        self.v2_closed(p).unwrap_or(f64::INFINITY)
    }

    /// Finite-difference oracle for V₂ along the frame flows.
    ///
    /// Probes only the smooth region: for singular tamings the probe ball must
    /// keep a 10h margin from the tube {x = 0}.
    pub fn v2_fd_oracle(&self, p: &GroupPoint, h: f64) -> Result<f64> {
        if self.is_singular_at(p) {
            return Err(Error::OriginSingularity);
        }
        if self.taming.is_singular() && p.x_norm() < 10.0 * h {
            return Err(Error::EvaluationFailure {
                context: format!("probe ball at |x| = {} too close to the tube for h = {h}", p.x_norm()),
            });
        }
        let field = |q: &GroupPoint| self.energy(q);
        let grad = fd_subgradient(&self.group, &field, p, h)?;
        let lap = fd_sublaplacian(&self.group, &field, p, h)?;
        let grad_sq: f64 = grad.iter().map(|v| v * v).sum();
        Ok(0.25 * grad_sq - 0.5 * lap)
    }

    /// Default FD step for this model at p.
    pub fn fd_step(&self, p: &GroupPoint) -> f64 {
        default_fd_step(p)
    }
}

/// Importance-sampling estimate of Z = ∫ e^{−U} dλ.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionEstimate {
    pub z_hat: f64,
    pub stderr: f64,
    /// Stable across the three sub-budgets (max/min < 1.5)?
    pub finite: bool,
    pub sub_estimates: [f64; 3],
    pub spread_ratio: f64,
}

const PARTITION_MIN_BUDGET: usize = 10_000;

/// Estimate the partition function with a heavy-tailed product proposal:
/// independent Cauchy coordinates, center scale being the square of the
/// horizontal scale to match the dilation weights.
pub fn partition_estimate(model: &EnergyModel, budget: usize, seed: u64) -> Result<PartitionEstimate> {
    if budget < PARTITION_MIN_BUDGET {
        return Err(Error::BudgetTooSmall { budget, min: PARTITION_MIN_BUDGET });
    }
    let x_scale: f64 = 1.0;
    let z_scale = x_scale * x_scale;
    let g = &model.group;
    let chunk = 4096;
    let chunks = budget.div_ceil(chunk);
    // (sum, sum of squares, count, sub-budget index) per chunk.
    let parts: Vec<(f64, f64, usize, usize)> = chunk_map(chunks, |c| {
        let mut rng = substream(seed, c as u64);
        let take = chunk.min(budget - c * chunk);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..take {
            let mut log_q = 0.0;
            let mut draw = |scale: f64, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
                // Standard Cauchy via tangent transform.
                let u: f64 = rng.random::<f64>() - 0.5;
                let v = (std::f64::consts::PI * u).tan() * scale;
                log_q += -(std::f64::consts::PI * scale).ln() - (1.0 + (v / scale) * (v / scale)).ln();
                v
            };
            let x: Vec<f64> = (0..g.horizontal_dim()).map(|_| draw(x_scale, &mut rng)).collect();
            let z: Vec<f64> = (0..g.center_dim()).map(|_| draw(z_scale, &mut rng)).collect();
            let p = GroupPoint::new(x, z);
            let u_val = model.energy(&p).unwrap_or(f64::INFINITY);
            let w = if u_val.is_finite() { (-u_val - log_q).exp() } else { 0.0 };
            sum += w;
            sumsq += w * w;
        }
        (sum, sumsq, take, c % 3)
    });
    let mut total = 0.0;
    let mut total_sq = 0.0;
    let mut count = 0usize;
    let mut sub_sum = [0.0f64; 3];
    let mut sub_count = [0usize; 3];
    for (s, s2, n, b) in parts {
        total += s;
        total_sq += s2;
        count += n;
        sub_sum[b] += s;
        sub_count[b] += n;
    }
    let mean = total / count as f64;
    let var = (total_sq / count as f64 - mean * mean).max(0.0);
    let stderr = (var / count as f64).sqrt();
    let subs = [
        sub_sum[0] / sub_count[0].max(1) as f64,
        sub_sum[1] / sub_count[1].max(1) as f64,
        sub_sum[2] / sub_count[2].max(1) as f64,
    ];
    let hi = subs.iter().fold(f64::MIN, |a, &b| a.max(b));
    let lo = subs.iter().fold(f64::MAX, |a, &b| a.min(b));
    let spread_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(PartitionEstimate { z_hat: mean, stderr, finite: spread_ratio < 1.5, sub_estimates: subs, spread_ratio })
}

/// Convenience: propose a point from the same heavy-tailed proposal used by
/// the partition estimator (used by diagnostics tests).
pub fn heavy_tailed_point(g: &Step2Group, rng: &mut impl Rng) -> GroupPoint {
    let cauchy = |rng: &mut dyn FnMut() -> f64| -> f64 {
        let u: f64 = rng() - 0.5;
        (std::f64::consts::PI * u).tan()
    };
    let mut f = || rng.random::<f64>();
    let x: Vec<f64> = (0..g.horizontal_dim()).map(|_| cauchy(&mut f)).collect();
    let z: Vec<f64> = (0..g.center_dim()).map(|_| cauchy(&mut f)).collect();
    GroupPoint::new(x, z)
}

/// Gaussian vector helper shared by samplers.
pub(crate) fn standard_normal_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}
