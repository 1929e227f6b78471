use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fields::LocalFields;
use super::majorant::Majorant;
use super::rng::SimRng;
use crate::coupling::CouplingField;
use crate::model::SpinChain;
use crate::{Error, Result};

/// Tolerance of the periodic energy re-validation, relative to `Σ_{i<j} U_ij`.
pub const ENERGY_TOLERANCE: f64 = 1e-8;

/// Initial configuration of a chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    #[default]
    Ordered,
    Random,
}

/// How cluster bonds are proposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterBuilder {
    /// Candidates from the power-law majorant, thinned to the true bond probability.
    #[default]
    Majorant,
    /// Test every aligned site against every cluster site.
    Naive,
}

#[derive(Default)]
struct ClusterScratch {
    in_cluster: Vec<bool>,
    stack: Vec<usize>,
    members: Vec<usize>,
    row: Vec<f64>,
}

/// One Markov chain of the spin system: spins, the cached energy
/// `Σ_{i<j} U σ_i σ_j`, its generator and counters.
pub struct ChainState {
    spins: Vec<i8>,
    energy: f64,
    energy_scale: f64,
    rng: SimRng,
    sweep_count: u64,
    fields: LocalFields,
    scratch: ClusterScratch,
    proposals: u64,
    accepted: u64,
    clusters: u64,
    cluster_sites: u64,
}

impl ChainState {
    pub fn new(c: &CouplingField, start: Start, mut rng: SimRng) -> Self {
        let n = c.n();
        let spins: Vec<i8> = match start {
            Start::Ordered => vec![1; n],
            Start::Random => (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        };
        Self::with_spins(c, spins, rng)
    }

    pub fn from_chain(c: &CouplingField, chain: &SpinChain, rng: SimRng) -> Result<Self> {
        if chain.len() != c.n() {
            return Err(Error::LengthMismatch { expected: c.n(), got: chain.len() });
        }
        Ok(Self::with_spins(c, chain.as_slice().to_vec(), rng))
    }

    fn with_spins(c: &CouplingField, spins: Vec<i8>, rng: SimRng) -> Self {
        let n = c.n();
        let fields = LocalFields::new(c, &spins);
        let energy = fields.energy_from_fields(&spins);
        Self {
            spins,
            energy,
            energy_scale: c.total_coupling().max(f64::MIN_POSITIVE),
            rng,
            sweep_count: 0,
            fields,
            scratch: ClusterScratch {
                in_cluster: vec![false; n],
                stack: Vec::new(),
                members: Vec::new(),
                row: vec![0.0; n],
            },
            proposals: 0,
            accepted: 0,
            clusters: 0,
            cluster_sites: 0,
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn chain(&self) -> SpinChain {
        SpinChain::new(self.spins.clone()).expect("spins are ±1")
    }

    pub fn mask(&self) -> u64 {
        self.chain().to_mask()
    }

    /// Cached `Σ_{i<j} U σ_i σ_j`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweep_count
    }

    pub(crate) fn finish_sweep(&mut self) {
        self.sweep_count += 1;
    }

    pub fn acceptance(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.accepted as f64 / self.proposals as f64)
    }

    pub fn mean_cluster_size(&self) -> Option<f64> {
        (self.clusters > 0).then(|| self.cluster_sites as f64 / self.clusters as f64)
    }

    pub fn reset_counters(&mut self) {
        self.proposals = 0;
        self.accepted = 0;
        self.clusters = 0;
        self.cluster_sites = 0;
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// Current local field of 0-based site `a`.
    pub fn local_field(&self, c: &CouplingField, a: usize) -> f64 {
        self.fields.field(c, a)
    }

    #[inline]
    fn flip(&mut self, c: &CouplingField, a: usize, h: f64) {
        let s = self.spins[a];
        self.energy -= 2.0 * s as f64 * h;
        self.spins[a] = -s;
        self.fields.record_flip(c, &self.spins, a, -s);
    }

    /// Flip a set of sites, sequentially through the flip queue when the set
    /// is small, otherwise in one go followed by a full field refresh.
    fn flip_sites(&mut self, c: &CouplingField, sites: &[usize]) {
        if sites.len() + self.fields.pending() < self.fields.threshold() {
            for &a in sites {
                let h = self.fields.field(c, a);
                self.flip(c, a, h);
            }
        } else {
            for &a in sites {
                self.spins[a] = -self.spins[a];
            }
            self.fields.refresh(c, &self.spins);
            self.energy = self.fields.energy_from_fields(&self.spins);
        }
    }

    /// `N` single-spin Metropolis proposals at uniformly random sites for the
    /// weight `exp(β Σ_{i<j} U σ_i σ_j)`.
    pub fn metropolis_sweep(&mut self, c: &CouplingField, beta: f64) {
        let n = self.spins.len();
        for _ in 0..n {
            let a = self.rng.random_range(0..n);
            let h = self.fields.field(c, a);
            let gain = -2.0 * self.spins[a] as f64 * h;
            self.proposals += 1;
            if gain >= 0.0 || self.rng.random::<f64>() < (beta * gain).exp() {
                self.accepted += 1;
                self.flip(c, a, h);
            }
        }
    }

    /// Grow and flip one Wolff cluster, proposing bonds from the majorant.
    ///
    /// From each cluster site, candidate partners in each direction are drawn
    /// as the points of an independent Bernoulli process with success
    /// probabilities `1 - exp(-2β Ū(d))`, by inverting its cumulative hazard.
    /// An aligned candidate outside the cluster joins with probability
    /// `(1 - exp(-2β U)) / (1 - exp(-2β Ū))`, which makes the net bond
    /// probability exactly `1 - exp(-2β U)`.
    pub fn cluster_update(&mut self, c: &CouplingField, beta: f64, majorant: &Majorant) -> Result<usize> {
        let n = self.spins.len();
        let seed = self.rng.random_range(0..n);
        let s = self.spins[seed];
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.members.clear();
        scratch.stack.clear();
        scratch.in_cluster[seed] = true;
        scratch.members.push(seed);
        scratch.stack.push(seed);

        let mut result = Ok(());
        if beta > 0.0 {
            let cumulative = majorant.cumulative();
            let two_beta = 2.0 * beta;
            'grow: while let Some(a) = scratch.stack.pop() {
                for right in [true, false] {
                    let limit = if right { n - 1 - a } else { a };
                    let mut r0 = 0usize;
                    while r0 < limit {
                        let exp_draw = -(1.0 - self.rng.random::<f64>()).ln();
                        let target = cumulative[r0] + exp_draw / two_beta;
                        let r = r0 + 1 + cumulative[r0 + 1..=limit].partition_point(|&x| x <= target);
                        if r > limit {
                            break;
                        }
                        r0 = r;
                        let b = if right { a + r } else { a - r };
                        if scratch.in_cluster[b] || self.spins[b] != s {
                            continue;
                        }
                        let p_true = -(-two_beta * c.u(a, b)).exp_m1();
                        let p_bar = -(-two_beta * majorant.bound(r)).exp_m1();
                        if p_true > p_bar * (1.0 + 1e-12) {
                            result = Err(Error::MajorantViolation {
                                i: a.min(b) + 1,
                                j: a.max(b) + 1,
                                coupling: c.u(a, b),
                                bound: majorant.bound(r),
                            });
                            break 'grow;
                        }
                        if self.rng.random::<f64>() * p_bar < p_true {
                            scratch.in_cluster[b] = true;
                            scratch.members.push(b);
                            scratch.stack.push(b);
                        }
                    }
                }
            }
        }
        let size = self.finish_cluster(c, &mut scratch, result.is_ok());
        self.scratch = scratch;
        result.map(|_| size)
    }

    /// Grow and flip one Wolff cluster by testing every aligned site outside
    /// the cluster against each cluster site: O(cluster size × N).
    pub fn cluster_update_naive(&mut self, c: &CouplingField, beta: f64) -> usize {
        let n = self.spins.len();
        let seed = self.rng.random_range(0..n);
        let s = self.spins[seed];
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.members.clear();
        scratch.stack.clear();
        scratch.in_cluster[seed] = true;
        scratch.members.push(seed);
        scratch.stack.push(seed);
        if beta > 0.0 {
            while let Some(a) = scratch.stack.pop() {
                c.fill_row(a, &mut scratch.row);
                for b in 0..n {
                    if scratch.in_cluster[b] || self.spins[b] != s {
                        continue;
                    }
                    let p = -(-2.0 * beta * scratch.row[b]).exp_m1();
                    if self.rng.random::<f64>() < p {
                        scratch.in_cluster[b] = true;
                        scratch.members.push(b);
                        scratch.stack.push(b);
                    }
                }
            }
        }
        let size = self.finish_cluster(c, &mut scratch, true);
        self.scratch = scratch;
        size
    }

    fn finish_cluster(&mut self, c: &CouplingField, scratch: &mut ClusterScratch, flip: bool) -> usize {
        for &a in &scratch.members {
            scratch.in_cluster[a] = false;
        }
        if flip {
            self.flip_sites(c, &scratch.members);
            self.clusters += 1;
            self.cluster_sites += scratch.members.len() as u64;
        }
        scratch.members.len()
    }

    /// Compare the cached energy with a direct O(N²) evaluation and resync.
    pub fn validate_energy(&mut self, c: &CouplingField) -> Result<()> {
        let fresh = c.pair_energy(&self.spins);
        if (self.energy - fresh).abs() > ENERGY_TOLERANCE * self.energy_scale {
            return Err(Error::EnergyDrift { cached: self.energy, fresh });
        }
        self.energy = fresh;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::sampler::rng::stream;

    fn field(n: usize, alpha: f64) -> CouplingField {
        CouplingField::new(ModelParams::new(n, alpha, 1.0).unwrap())
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let c = field(50, 3.5);
        let mut st = ChainState::new(&c, Start::Random, stream(1, 0));
        for _ in 0..20 {
            st.metropolis_sweep(&c, 0.0);
        }
        assert_eq!(st.acceptance(), Some(1.0));
        st.validate_energy(&c).unwrap();
    }

    #[test]
    fn infinite_temperature_clusters_are_single_sites() {
        let c = field(40, 3.5);
        let m = Majorant::new(&c, None).unwrap();
        let mut st = ChainState::new(&c, Start::Random, stream(2, 0));
        for _ in 0..100 {
            assert_eq!(st.cluster_update(&c, 0.0, &m).unwrap(), 1);
            assert_eq!(st.cluster_update_naive(&c, 0.0), 1);
        }
    }

    #[test]
    fn single_flip_energy_change() {
        let c = field(2, 4.0);
        let st = ChainState::new(&c, Start::Ordered, stream(0, 0));
        let gain = -2.0 * st.spins()[0] as f64 * st.local_field(&c, 0);
        assert!((gain.abs() - 0.125).abs() < 1e-15);
        assert!((st.energy() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn cached_energy_tracks_long_runs() {
        for n in [7, 150, 700] {
            let c = field(n, 3.5);
            let m = Majorant::new(&c, None).unwrap();
            let mut st = ChainState::new(&c, Start::Random, stream(5, n as u64));
            for sweep in 0..200 {
                st.metropolis_sweep(&c, 0.6);
                st.cluster_update(&c, 0.6, &m).unwrap();
                st.cluster_update_naive(&c, 0.6);
                if sweep % 50 == 0 {
                    st.validate_energy(&c).unwrap();
                }
            }
            st.validate_energy(&c).unwrap();
        }
    }

    #[test]
    fn drift_is_detected() {
        let c = field(20, 3.5);
        let mut st = ChainState::new(&c, Start::Ordered, stream(0, 0));
        st.energy += 1.0;
        assert!(matches!(st.validate_energy(&c), Err(Error::EnergyDrift { .. })));
    }

    #[test]
    fn ordered_phase_grows_large_clusters() {
        let c = field(256, 3.5);
        let m = Majorant::new(&c, None).unwrap();
        let mut st = ChainState::new(&c, Start::Ordered, stream(9, 0));
        let sizes: Vec<usize> = (0..50).map(|_| st.cluster_update(&c, 5.0, &m).unwrap()).collect();
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        assert!(mean > 128.0, "mean cluster size {mean}");
    }
}
