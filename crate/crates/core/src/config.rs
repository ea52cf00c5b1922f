//! Declarative run configuration: group, norm, taming, outer profile, and
//! per-command sections. One file drives every command; commands ignore
//! sections they do not use but validate the ones they do.

use serde::{Deserialize, Serialize};

use crate::dynamics::SpectrumConfig;
use crate::error::{Error, Result};
use crate::group::{GeneralizedHeisenbergParams, GroupPoint, Step2Group};
use crate::norms::{NormSpec, Zeta};
use crate::taming::{EnergyModel, OuterFunction, TamingSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupConfig {
    Heisenberg,
    GeneralizedHeisenberg {
        #[serde(rename = "L")]
        l: Vec<f64>,
    },
    Step2 {
        n: usize,
        m: usize,
        lambdas: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormConfig {
    Type2 { a: f64 },
    Type2aug { a: f64 },
    KaplanGh,
    /// Perspective composite over the control-distance surrogate: the base
    /// slot is the augmented smooth norm, the other slot the smooth norm.
    Perspective {
        zeta: String,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "default_a")]
        a: f64,
    },
    Geomean {
        alpha: f64,
        #[serde(default = "default_a")]
        a: f64,
    },
}

fn default_a() -> f64 {
    16.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TamingConfig {
    None,
    AdditivePower { sigma: f64, beta: f64 },
    AdditiveLog { beta: f64 },
    MultPower { sigma: f64 },
    Mult2 {
        #[serde(rename = "L")]
        l: f64,
        alpha: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterConfig {
    Power { p: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSection {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
}

fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
}

fn default_scan_samples() -> usize {
    4096
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { radii: default_radii(), samples: default_scan_samples() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSection {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_true")]
    pub auto_tune: bool,
    /// Start point as a flat [x..., z...] coordinate list.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_oracle_thetas")]
    pub oracle_thetas: usize,
}

fn default_step() -> f64 {
    0.05
}
fn default_steps() -> usize {
    100_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_thin() -> usize {
    50
}
fn default_true() -> bool {
    true
}
fn default_bins() -> usize {
    20
}
fn default_oracle_thetas() -> usize {
    4096
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            step: default_step(),
            steps: default_steps(),
            burn_in: default_burn_in(),
            thin: default_thin(),
            auto_tune: true,
            start: None,
            bins: default_bins(),
            oracle_thetas: default_oracle_thetas(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSection {
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    #[serde(default)]
    pub half_widths: Option<Vec<f64>>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_v_clamp")]
    pub v_clamp: f64,
    #[serde(default = "default_max_matvecs")]
    pub max_matvecs: usize,
}

fn default_k() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-6
}
fn default_v_clamp() -> f64 {
    1e6
}
fn default_max_matvecs() -> usize {
    60_000
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            grid: None,
            half_widths: None,
            k: default_k(),
            tol: default_tol(),
            v_clamp: default_v_clamp(),
            max_matvecs: default_max_matvecs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbSection {
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_alpha_q")]
    pub alpha_q: f64,
    #[serde(default = "default_perturb_samples")]
    pub samples: usize,
}

fn default_q() -> f64 {
    1.0
}
fn default_alpha_q() -> f64 {
    1.0
}
fn default_perturb_samples() -> usize {
    20_000
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self { q: default_q(), alpha_q: default_alpha_q(), samples: default_perturb_samples() }
    }
}

/// The whole run configuration. Defaults are materialized by [`RunConfig::resolve`]
/// so that report echoes carry every effective value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: usize,
    pub group: GroupConfig,
    pub norm: NormConfig,
    #[serde(default = "default_taming")]
    pub taming: TamingConfig,
    #[serde(default = "default_outer")]
    pub outer: OuterConfig,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default)]
    pub perturb: Option<PerturbSection>,
}

fn default_taming() -> TamingConfig {
    TamingConfig::None
}

fn default_outer() -> OuterConfig {
    OuterConfig::Power { p: 2.0 }
}

impl RunConfig {
    /// Materialize every optional section so serialized echoes show the full
    /// effective configuration.
    pub fn resolve(&self) -> RunConfig {
        let mut c = self.clone();
        c.scan = Some(c.scan.clone().unwrap_or_default());
        c.chain = Some(c.chain.clone().unwrap_or_default());
        c.spectrum = Some(c.spectrum.clone().unwrap_or_default());
        c.perturb = Some(c.perturb.clone().unwrap_or_default());
        c
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::ValidationError {
            key: "seed".into(),
            message: "stochastic commands require an explicit seed".into(),
        })
    }

    pub fn build_group(&self) -> Result<Step2Group> {
        match &self.group {
            GroupConfig::Heisenberg => Ok(Step2Group::heisenberg()),
            GroupConfig::GeneralizedHeisenberg { l } => {
                let params = GeneralizedHeisenbergParams::new(l.clone()).map_err(|e| {
                    Error::ValidationError { key: "group.L".into(), message: e.to_string() }
                })?;
                Step2Group::generalized_heisenberg(params)
            }
            GroupConfig::Step2 { n, m, lambdas } => {
                let mats = lambdas
                    .iter()
                    .enumerate()
                    .map(|(k, rows)| {
                        if rows.len() != *n || rows.iter().any(|r| r.len() != *n) {
                            return Err(Error::ValidationError {
                                key: format!("group.lambdas[{k}]"),
                                message: format!("expected an {n}×{n} matrix"),
                            });
                        }
                        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                        Ok(nalgebra::DMatrix::from_row_slice(*n, *n, &flat))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Step2Group::new(*n, *m, mats)
            }
        }
    }

    pub fn build_norm(&self, group: &Step2Group) -> Result<NormSpec> {
        let spec = match &self.norm {
            NormConfig::Type2 { a } => NormSpec::type2(*a),
            NormConfig::Type2aug { a } => NormSpec::type2_augmented(*a),
            NormConfig::KaplanGh => {
                let params = group.gh_params().ok_or_else(|| Error::ValidationError {
                    key: "norm.kind".into(),
                    message: "norm.kind = \"kaplan_gh\" requires group.kind = \"generalized_heisenberg\""
                        .into(),
                })?;
                NormSpec::kaplan_gh(params.l.clone())
            }
            NormConfig::Perspective { zeta, alpha, a } => {
                let zeta = match (zeta.as_str(), alpha) {
                    ("one", _) => Zeta::One,
                    ("root", Some(al)) => Zeta::Root { alpha: *al },
                    ("affine", Some(al)) => Zeta::Affine { alpha: *al },
                    ("root" | "affine", None) => {
                        return Err(Error::ValidationError {
                            key: "norm.alpha".into(),
                            message: format!("zeta = \"{zeta}\" requires an alpha parameter"),
                        })
                    }
                    _ => {
                        return Err(Error::ValidationError {
                            key: "norm.zeta".into(),
                            message: format!("unknown zeta \"{zeta}\"; expected one|root|affine"),
                        })
                    }
                };
                NormSpec::Perspective {
                    base: Box::new(NormSpec::type2_augmented(*a)),
                    other: Box::new(NormSpec::type2(*a)),
                    zeta,
                }
            }
            NormConfig::Geomean { alpha, a } => NormSpec::GeometricMean {
                base: Box::new(NormSpec::type2_augmented(*a)),
                other: Box::new(NormSpec::type2(*a)),
                alpha: *alpha,
            },
        };
        spec.validate_for(group).map_err(|e| match e {
            Error::DimensionMismatch { context } | Error::InvalidParameter { context } => {
                Error::ValidationError { key: "norm".into(), message: context }
            }
            other => other,
        })?;
        Ok(spec)
    }

    pub fn build_taming(&self) -> Result<TamingSpec> {
        let t = match &self.taming {
            TamingConfig::None => TamingSpec::None,
            TamingConfig::AdditivePower { sigma, beta } => {
                TamingSpec::AdditivePower { sigma: *sigma, beta: *beta }
            }
            TamingConfig::AdditiveLog { beta } => TamingSpec::AdditiveLog { beta: *beta },
            TamingConfig::MultPower { sigma } => TamingSpec::MultiplicativePower { sigma: *sigma },
            TamingConfig::Mult2 { l, alpha } => TamingSpec::MultiplicativeTwo { l: *l, alpha: *alpha },
        };
        t.validate().map_err(|e| match e {
            Error::InvalidParameter { context } => {
                Error::ValidationError { key: "taming".into(), message: context }
            }
            other => other,
        })?;
        Ok(t)
    }

    pub fn build_outer(&self) -> Result<OuterFunction> {
        let OuterConfig::Power { p } = &self.outer;
        let v = OuterFunction::power(*p);
        v.validate().map_err(|e| match e {
            Error::InvalidParameter { context } => {
                Error::ValidationError { key: "outer.p".into(), message: context }
            }
            other => other,
        })?;
        Ok(v)
    }

    pub fn build_model(&self) -> Result<EnergyModel> {
        let group = self.build_group()?;
        let norm = self.build_norm(&group)?;
        let taming = self.build_taming()?;
        let outer = self.build_outer()?;
        EnergyModel::new(group, norm, taming, outer)
    }

    /// When the norm is a composite over the control-distance surrogate,
    /// return (K, K₀) for the perturbation pipeline.
    pub fn composite_pair(&self, group: &Step2Group) -> Result<(NormSpec, NormSpec)> {
        let k = self.build_norm(group)?;
        match &k {
            NormSpec::Perspective { base, .. } | NormSpec::GeometricMean { base, .. } => {
                Ok((k.clone(), (**base).clone()))
            }
            _ => Err(Error::ValidationError {
                key: "norm.kind".into(),
                message: "perturbation analysis requires norm.kind = \"perspective\" or \"geomean\"".into(),
            }),
        }
    }

    pub fn chain_config(&self, group: &Step2Group, seed: u64) -> Result<crate::dynamics::ChainConfig> {
        let section = self.chain.clone().unwrap_or_default();
        let n = group.horizontal_dim();
        let m = group.center_dim();
        let start = match &section.start {
            Some(flat) => {
                if flat.len() != n + m {
                    return Err(Error::ValidationError {
                        key: "chain.start".into(),
                        message: format!("expected {} coordinates, got {}", n + m, flat.len()),
                    });
                }
                GroupPoint::new(flat[..n].to_vec(), flat[n..].to_vec())
            }
            None => {
                let mut x = vec![0.0; n];
                x[0] = 1.0;
                GroupPoint::new(x, vec![0.0; m])
            }
        };
        Ok(crate::dynamics::ChainConfig {
            step: section.step,
            steps: section.steps,
            burn_in: section.burn_in,
            seed,
            start,
            auto_tune: section.auto_tune,
            thin: section.thin,
        })
    }

    pub fn spectrum_config(&self, group: &Step2Group) -> Result<SpectrumConfig> {
        let section = self.spectrum.clone().unwrap_or_default();
        let n = group.horizontal_dim();
        let m = group.center_dim();
        let half_widths = section.half_widths.unwrap_or_else(|| {
            let mut w = vec![2.0; n];
            w.extend(std::iter::repeat_n(1.0, m));
            w
        });
        let grid = section.grid.unwrap_or_else(|| vec![32; n + m]);
        Ok(SpectrumConfig {
            grid,
            half_widths,
            k: section.k,
            tol: section.tol,
            v_clamp: section.v_clamp,
            max_matvecs: section.max_matvecs,
        })
    }
}
