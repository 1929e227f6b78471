//! Self-repelling random walks on Z² with long-range repulsion `|i-j|^-α`.
//!
//! The walk ensemble maps exactly onto two independent one-dimensional Ising
//! chains with a ferromagnetic, non translation-invariant coupling `U^N_ij`.
//! This crate provides:
//!
//! * [`model`]: walks, spin chains, the bijection between them and both energies;
//! * [`coupling`]: the effective coupling with O(1) evaluation and bound fitting;
//! * [`oracle`]: exact enumeration of walks and spins at small `N`;
//! * [`sampler`]: Metropolis and majorant-thinned Wolff updates with binning errors;
//! * [`analysis`]: scaling-exponent fits, regime labels and `(α, β, N)` scans.

pub mod analysis;
pub mod coupling;
mod error;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod summation;

pub use analysis::{classify, fit_gamma, scan, GammaFit, Regime, ScalingPoint, ScanResult};
pub use coupling::{constant_k, BoundFit, CouplingField, PrefixTable};
pub use error::{Error, Result};
pub use model::{ModelParams, SpinChain, Step, StepIncrements, Walk};
pub use oracle::ExactResult;
pub use sampler::{ChainState, RunPlan, SampleStats, Sampler, UpdateMix};
