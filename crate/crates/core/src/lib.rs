//! Numerical toolkit for step-2 Carnot groups: sub-Riemannian calculus,
//! homogeneous norms, singularity-tamed probability densities, and the
//! coercivity diagnostics (divergence of V₂, dominance, perturbation
//! stability, spectral gap) built on top of them.
//!
//! Scans and samplers are data-parallel over deterministic per-chunk RNG
//! substreams; disabling the `parallel` feature (or setting one thread)
//! reproduces identical numbers sequentially.

pub mod calc;
pub mod certify;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod group;
pub mod norms;
pub mod taming;

pub use calc::{chain_rule_bundle, fd_subgradient, fd_sublaplacian, frame_at, DerivativeBundle};
pub use error::{Error, Result};
pub use group::{GeneralizedHeisenbergParams, GroupPoint, Step2Group};
pub use norms::NormSpec;
pub use taming::{EnergyModel, OuterFunction, TamingSpec};
