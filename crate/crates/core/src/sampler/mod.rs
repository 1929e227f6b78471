//! Monte Carlo sampling of the long-range chain at large N.
//!
//! A compound sweep applies `cluster_updates` Wolff cluster flips followed by
//! `metropolis_sweeps` Metropolis sweeps. `⟨M²⟩` of one chain equals the
//! walk's mean square end-to-end distance.

mod fields;
mod majorant;
pub mod rng;
mod state;
pub mod stats;

pub use majorant::Majorant;
pub use state::{ChainState, ClusterBuilder, Start, ENERGY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::coupling::{bulk_range, fit_bounds, CouplingField, DEFAULT_EPSILON};
use crate::model::ModelParams;
use crate::{Error, Result};
use stats::{binning_analysis, block_means, chi_square_gof, ChiSquareResult};

/// Minimum number of measurements a plan must produce.
pub const MIN_MEASUREMENTS: u64 = 100;

/// Blocks kept per run for jackknife resampling downstream.
pub const JACKKNIFE_BLOCKS: usize = 32;

/// Updates applied per compound sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMix {
    pub cluster_updates: u32,
    pub metropolis_sweeps: u32,
}

impl UpdateMix {
    pub const MIXED: Self = Self { cluster_updates: 1, metropolis_sweeps: 1 };
    pub const METROPOLIS_ONLY: Self = Self { cluster_updates: 0, metropolis_sweeps: 1 };
    pub const CLUSTER_ONLY: Self = Self { cluster_updates: 1, metropolis_sweeps: 0 };
}

impl Default for UpdateMix {
    fn default() -> Self {
        Self::MIXED
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    /// Thermalization sweeps; `None` picks `max(1000, 20 τ_int)` from a pilot run.
    pub n_therm: Option<u64>,
    pub n_measure: u64,
    pub measure_stride: u64,
    pub update_mix: UpdateMix,
    pub cluster_builder: ClusterBuilder,
    pub seed: u64,
    /// Random stream of the chain; scans derive one per grid cell.
    pub stream: u64,
    pub start: Start,
    /// Re-validate the cached energy every this many sweeps.
    pub validate_every: u64,
}

impl Default for RunPlan {
    fn default() -> Self {
        Self {
            n_therm: None,
            n_measure: 10_000,
            measure_stride: 1,
            update_mix: UpdateMix::default(),
            cluster_builder: ClusterBuilder::default(),
            seed: 0,
            stream: 0,
            start: Start::default(),
            validate_every: 1000,
        }
    }
}

impl RunPlan {
    pub fn validate(&self) -> Result<()> {
        if self.measure_stride == 0 {
            return Err(Error::InvalidPlan("measure_stride must be positive".into()));
        }
        if self.n_measure / self.measure_stride < MIN_MEASUREMENTS {
            return Err(Error::InvalidPlan(format!(
                "n_measure / measure_stride = {} < {MIN_MEASUREMENTS}",
                self.n_measure / self.measure_stride
            )));
        }
        if self.update_mix.cluster_updates == 0 && self.update_mix.metropolis_sweeps == 0 {
            return Err(Error::InvalidPlan("update mix performs no updates".into()));
        }
        if self.validate_every == 0 {
            return Err(Error::InvalidPlan("validate_every must be positive".into()));
        }
        Ok(())
    }
}

/// Estimates from one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub mean_m_sq: f64,
    /// Binning standard error of `mean_m_sq`.
    pub err_m_sq: f64,
    /// `⟨|M|⟩ / N`.
    pub mean_abs_m: f64,
    /// `⟨Σ_{i<j} U σ_i σ_j⟩`.
    pub mean_energy: f64,
    /// Integrated autocorrelation time of `M²`, in sweeps.
    pub tau_int: f64,
    pub n_sweeps: u64,
    pub n_therm: u64,
    /// Metropolis acceptance rate; 0 when no Metropolis proposals were made.
    pub acceptance: f64,
    /// Mean cluster size; 0 when no cluster updates were made.
    pub mean_cluster_size: f64,
    /// Binning did not plateau, so `err_m_sq` may be too small.
    pub error_underestimated: bool,
    /// Means of `M²` over contiguous measurement blocks.
    pub block_means: Vec<f64>,
}

/// A sampler bound to one coupling field: the majorant is built once.
pub struct Sampler<'a> {
    coupling: &'a CouplingField,
    majorant: Majorant,
}

impl<'a> Sampler<'a> {
    /// Starts the majorant from the fitted bulk constant when the bulk is
    /// nonempty at the default margin.
    pub fn new(coupling: &'a CouplingField) -> Result<Self> {
        let hint = match bulk_range(coupling.n(), DEFAULT_EPSILON) {
            Ok(_) => Some(fit_bounds(coupling, DEFAULT_EPSILON)?.c2_hat),
            Err(_) => None,
        };
        Ok(Self { coupling, majorant: Majorant::new(coupling, hint)? })
    }

    pub fn coupling(&self) -> &CouplingField {
        self.coupling
    }

    pub fn majorant(&self) -> &Majorant {
        &self.majorant
    }

    pub fn compound_sweep(&self, state: &mut ChainState, beta: f64, mix: UpdateMix, builder: ClusterBuilder) -> Result<()> {
        let c = self.coupling;
        for _ in 0..mix.cluster_updates {
            match builder {
                ClusterBuilder::Majorant => {
                    state.cluster_update(c, beta, &self.majorant)?;
                }
                ClusterBuilder::Naive => {
                    state.cluster_update_naive(c, beta);
                }
            }
        }
        for _ in 0..mix.metropolis_sweeps {
            state.metropolis_sweep(c, beta);
        }
        state.finish_sweep();
        Ok(())
    }

    fn sweep_checked(&self, state: &mut ChainState, beta: f64, plan: &RunPlan) -> Result<()> {
        self.compound_sweep(state, beta, plan.update_mix, plan.cluster_builder)?;
        if state.sweep_count().is_multiple_of(plan.validate_every) {
            state.validate_energy(self.coupling)?;
        }
        Ok(())
    }

    /// Thermalize, then measure `M²` every `measure_stride` sweeps.
    /// Deterministic for a fixed plan.
    pub fn run(&self, beta: f64, plan: &RunPlan) -> Result<SampleStats> {
        plan.validate()?;
        let c = self.coupling;
        let p = c.params().with_beta(beta);
        p.validate()?;
        let n = c.n();
        let mut state = ChainState::new(c, plan.start, rng::stream(plan.seed, plan.stream));

        let n_therm = match plan.n_therm {
            Some(t) => {
                for _ in 0..t {
                    self.sweep_checked(&mut state, beta, plan)?;
                }
                t
            }
            None => {
                const PILOT: u64 = 1000;
                let mut pilot = Vec::with_capacity(PILOT as usize);
                for _ in 0..PILOT {
                    self.sweep_checked(&mut state, beta, plan)?;
                    pilot.push((state.magnetization() as f64).powi(2));
                }
                let extra = (20.0 * binning_analysis(&pilot).tau_int).ceil() as u64;
                let extra = extra.max(1000);
                for _ in 0..extra {
                    self.sweep_checked(&mut state, beta, plan)?;
                }
                PILOT + extra
            }
        };

        state.reset_counters();
        let samples = (plan.n_measure / plan.measure_stride) as usize;
        let (mut m_sq, mut abs_m, mut energy) =
            (Vec::with_capacity(samples), Vec::with_capacity(samples), Vec::with_capacity(samples));
        for sweep in 1..=plan.n_measure {
            self.sweep_checked(&mut state, beta, plan)?;
            if sweep % plan.measure_stride == 0 {
                let m = state.magnetization() as f64;
                m_sq.push(m * m);
                abs_m.push(m.abs() / n as f64);
                energy.push(state.energy());
            }
        }
        state.validate_energy(c)?;

        let binned = binning_analysis(&m_sq);
        if !binned.plateau {
            log::warn!("N={n} beta={beta}: binning did not plateau, error underestimated");
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        Ok(SampleStats {
            n,
            alpha: p.alpha,
            beta,
            seed: plan.seed,
            mean_m_sq: binned.mean,
            err_m_sq: binned.err,
            mean_abs_m: mean(&abs_m),
            mean_energy: mean(&energy),
            tau_int: binned.tau_int * plan.measure_stride as f64,
            n_sweeps: plan.n_measure,
            n_therm,
            acceptance: state.acceptance().unwrap_or(0.0),
            mean_cluster_size: state.mean_cluster_size().unwrap_or(0.0),
            error_underestimated: !binned.plateau,
            block_means: block_means(&m_sq, JACKKNIFE_BLOCKS),
        })
    }
}

/// Run one chain at `p.beta` on the coupling `c`.
pub fn run(p: &ModelParams, plan: &RunPlan, c: &CouplingField) -> Result<SampleStats> {
    if p.n != c.n() || p.alpha != c.alpha() {
        return Err(Error::InvalidParams("model parameters do not match the coupling field".into()));
    }
    Sampler::new(c)?.run(p.beta, plan)
}

/// Result of comparing empirical state frequencies with exact probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub chi_square: ChiSquareResult,
    /// Largest integrated autocorrelation time (sweeps) among `M`, `M²` and energy.
    pub tau_int: f64,
    /// Spacing of the retained samples, in sweeps.
    pub thinning: u64,
    pub sweeps: u64,
}

/// Run `sweeps` compound sweeps, keep states spaced by `ceil(5 τ_int)` sweeps so
/// that retained samples are effectively independent, and test their
/// frequencies against `exact` (indexed by spin mask).
pub fn stationarity_test(
    sampler: &Sampler<'_>,
    beta: f64,
    mix: UpdateMix,
    builder: ClusterBuilder,
    sweeps: u64,
    seed: u64,
    exact: &[f64],
) -> Result<StationarityReport> {
    let c = sampler.coupling();
    if exact.len() != 1 << c.n() {
        return Err(Error::LengthMismatch { expected: 1 << c.n(), got: exact.len() });
    }
    let mut state = ChainState::new(c, Start::Random, rng::stream(seed, 0));
    for _ in 0..1000 {
        sampler.compound_sweep(&mut state, beta, mix, builder)?;
    }
    let mut masks = Vec::with_capacity(sweeps as usize);
    let (mut ms, mut m2s, mut es) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..sweeps {
        sampler.compound_sweep(&mut state, beta, mix, builder)?;
        masks.push(state.mask() as u32);
        let m = state.magnetization() as f64;
        ms.push(m);
        m2s.push(m * m);
        es.push(state.energy());
    }
    let tau_int = [&ms, &m2s, &es].iter().map(|xs| binning_analysis(xs).tau_int).fold(0.5, f64::max);
    let thinning = (5.0 * tau_int).ceil().max(1.0) as u64;
    let mut counts = vec![0u64; exact.len()];
    for &mask in masks.iter().skip(thinning as usize - 1).step_by(thinning as usize) {
        counts[mask as usize] += 1;
    }
    Ok(StationarityReport { chi_square: chi_square_gof(&counts, exact, 5.0)?, tau_int, thinning, sweeps })
}
