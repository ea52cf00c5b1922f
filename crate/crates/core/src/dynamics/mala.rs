//! Metropolis-adjusted Langevin chain moving along the horizontal frame.
//!
//! Proposals compose the current point with a horizontal group element
//! (step·drift + √(2·step)·gaussian), where drift = −∇U in frame coordinates.
//! Because right translation preserves Lebesgue measure, the standard MALA
//! accept/reject ratio in frame coordinates leaves μ_U exactly invariant.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::substream;
use crate::group::GroupPoint;
use crate::taming::{standard_normal_vec, EnergyModel};

/// Tube radius below which proposals are auto-rejected.
const TUBE_REJECT: f64 = 1e-9;
const TUNE_WINDOW: usize = 100;

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub step: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub start: GroupPoint,
    /// Adapt the step size toward ~50% acceptance during burn-in.
    pub auto_tune: bool,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidParameter { context: format!("step size must be positive, got {}", self.step) });
        }
        if self.steps < self.burn_in {
            return Err(Error::InvalidParameter {
                context: format!("steps ({}) must be at least burn_in ({})", self.steps, self.burn_in),
            });
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter { context: "thin must be ≥ 1".into() });
        }
        Ok(())
    }
}

/// Post-burn-in states stored as a flat coordinate table.
#[derive(Debug, Clone)]
pub struct ChainSamples {
    n: usize,
    m: usize,
    flat: Vec<f64>,
    pub acceptance: f64,
    pub tuned_step: f64,
}

impl ChainSamples {
    pub fn len(&self) -> usize {
        self.flat.len() / (self.n + self.m)
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn coords(&self, i: usize) -> (&[f64], &[f64]) {
        let w = self.n + self.m;
        let row = &self.flat[i * w..(i + 1) * w];
        row.split_at(self.n)
    }

    pub fn point(&self, i: usize) -> GroupPoint {
        let (x, z) = self.coords(i);
        GroupPoint::new(x.to_vec(), z.to_vec())
    }

    pub fn iter_points(&self) -> impl Iterator<Item = GroupPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Run the chain; returns thinned post-burn-in samples with the realized
/// acceptance rate (measured after burn-in) and the tuned step size.
pub fn langevin_chain(model: &EnergyModel, cfg: &ChainConfig) -> Result<ChainSamples> {
    cfg.validate()?;
    if !model.group.contains(&cfg.start) {
        return Err(Error::DimensionMismatch { context: "chain start point has wrong dimensions".into() });
    }
    if model.is_singular_at(&cfg.start) || (model.taming.is_singular() && cfg.start.x_norm() < TUBE_REJECT) {
        return Err(Error::StartOnSingularSet);
    }
    let mut bundle = model.energy_bundle(&cfg.start).map_err(|_| Error::StartOnSingularSet)?;
    if !bundle.value.is_finite() || !bundle.is_finite() {
        return Err(Error::NonfiniteEnergy);
    }

    let n = model.group.horizontal_dim();
    let m = model.group.center_dim();
    let mut rng = substream(cfg.seed, 0);
    let mut p = cfg.start.clone();
    let mut step = cfg.step;

    let kept_cap = (cfg.steps - cfg.burn_in) / cfg.thin + 1;
    let mut flat = Vec::with_capacity(kept_cap * (n + m));
    let mut post_accepted = 0usize;
    let mut post_total = 0usize;
    let mut window_accepted = 0usize;

    for it in 0..cfg.steps {
        let burn = it < cfg.burn_in;
        let sqrt2s = (2.0 * step).sqrt();
        let eta = standard_normal_vec(&mut rng, n);
        let h: Vec<f64> = bundle
            .grad
            .iter()
            .zip(&eta)
            .map(|(g, e)| -step * g + sqrt2s * e)
            .collect();
        let proposal = model.group.horizontal_translate(&p, &h)?;
        let mut accept = false;
        if !(model.taming.is_singular() && proposal.x_norm() < TUBE_REJECT) {
            if let Ok(qb) = model.energy_bundle(&proposal) {
                if qb.is_finite() {
                    // ‖h + step·∇U(p)‖² − ‖h − step·∇U(q)‖², over 4·step.
                    let mut fwd = 0.0;
                    let mut rev = 0.0;
                    for i in 0..n {
                        let f = h[i] + step * bundle.grad[i];
                        let r = h[i] - step * qb.grad[i];
                        fwd += f * f;
                        rev += r * r;
                    }
                    let log_alpha = (bundle.value - qb.value) + (fwd - rev) / (4.0 * step);
                    let u: f64 = rng.random();
                    if u.ln() < log_alpha {
                        p = proposal;
                        bundle = qb;
                        accept = true;
                    }
                }
            }
        }
        if burn {
            if accept {
                window_accepted += 1;
            }
            if cfg.auto_tune && (it + 1) % TUNE_WINDOW == 0 {
                let rate = window_accepted as f64 / TUNE_WINDOW as f64;
                step = (step * (0.6 * (rate - 0.5)).exp()).clamp(1e-9, 10.0);
                window_accepted = 0;
            }
        } else {
            post_total += 1;
            if accept {
                post_accepted += 1;
            }
            if (it - cfg.burn_in) % cfg.thin == 0 {
                flat.extend_from_slice(&p.x);
                flat.extend_from_slice(&p.z);
            }
        }
    }

    let acceptance = if post_total > 0 { post_accepted as f64 / post_total as f64 } else { 0.0 };
    Ok(ChainSamples { n, m, flat, acceptance, tuned_step: step })
}
