//! Local fields `h_a = Σ_{b≠a} U_ab σ_b` of the long-range chain.
//!
//! A full recomputation splits the coupling into a Toeplitz part and three
//! rank-one boundary corrections (see [`crate::coupling`] for the tail table `T`):
//!
//! ```text
//! h_a = Σ_{b≠a} T(|a-b|+1) σ_b
//!       - Σ_{b>a} T(b+2) σ_b - T(N+1-a) Σ_{b>a} σ_b
//!       - T(a+2) Σ_{b<a} σ_b - Σ_{b<a} T(N+1-b) σ_b
//! ```
//!
//! The Toeplitz sum is one circular FFT convolution and the corrections are
//! running sums, so a refresh is O(N log N). Between refreshes, flips are
//! queued and folded into field queries on demand; the queue is flushed once
//! its length reaches about `sqrt(N log N)`, which balances query and refresh
//! cost.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::coupling::CouplingField;
use crate::summation::KahanSum;

/// Below this size the Toeplitz part is summed directly.
const DIRECT_LIMIT: usize = 96;

struct ToeplitzFft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl ToeplitzFft {
    fn new(c: &CouplingField) -> Self {
        let n = c.n();
        let len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut kernel_hat = vec![Complex::new(0.0, 0.0); len];
        for d in 1..n {
            let k = c.tail2(d + 1);
            kernel_hat[d].re = k;
            kernel_hat[len - d].re = k;
        }
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let mut scratch = vec![Complex::new(0.0, 0.0); scratch_len];
        forward.process_with_scratch(&mut kernel_hat, &mut scratch);
        Self { len, forward, inverse, kernel_hat, buf: vec![Complex::new(0.0, 0.0); len], scratch }
    }

    fn convolve(&mut self, spins: &[i8], out: &mut [f64]) {
        let n = spins.len();
        for (slot, &s) in self.buf.iter_mut().zip(spins) {
            *slot = Complex::new(s as f64, 0.0);
        }
        self.buf[n..].iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (z, k) in self.buf.iter_mut().zip(&self.kernel_hat) {
            *z *= k;
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / self.len as f64;
        for (o, z) in out.iter_mut().zip(&self.buf) {
            *o = z.re * norm;
        }
    }
}

/// Full field recomputation for one chain size.
pub(crate) struct FieldSolver {
    fft: Option<ToeplitzFft>,
    row: Vec<f64>,
}

impl FieldSolver {
    pub(crate) fn new(c: &CouplingField) -> Self {
        let n = c.n();
        let fft = (n > DIRECT_LIMIT).then(|| ToeplitzFft::new(c));
        Self { fft, row: vec![0.0; n] }
    }

    pub(crate) fn compute(&mut self, c: &CouplingField, spins: &[i8], out: &mut [f64]) {
        let n = c.n();
        let Some(fft) = self.fft.as_mut() else {
            for (a, h) in out.iter_mut().enumerate() {
                c.fill_row(a, &mut self.row);
                *h = self.row.iter().zip(spins).map(|(u, &s)| u * s as f64).sum();
            }
            return;
        };
        fft.convolve(spins, out);

        // right-hand corrections: Σ_{b>a} T(b+2) σ_b and Σ_{b>a} σ_b
        let (mut weighted, mut plain) = (0.0, 0.0);
        for a in (0..n).rev() {
            out[a] -= weighted + c.tail2(n + 1 - a) * plain;
            let s = spins[a] as f64;
            weighted += c.tail2(a + 2) * s;
            plain += s;
        }
        // left-hand corrections: Σ_{b<a} σ_b and Σ_{b<a} T(N+1-b) σ_b
        let (mut weighted, mut plain) = (0.0, 0.0);
        for a in 0..n {
            out[a] -= c.tail2(a + 2) * plain + weighted;
            let s = spins[a] as f64;
            weighted += c.tail2(n + 1 - a) * s;
            plain += s;
        }
    }
}

/// Fields at the last refresh plus the queue of flips since then.
pub(crate) struct LocalFields {
    base: Vec<f64>,
    pending: Vec<(usize, f64)>,
    threshold: usize,
    solver: FieldSolver,
}

impl LocalFields {
    pub(crate) fn new(c: &CouplingField, spins: &[i8]) -> Self {
        let n = c.n();
        let nf = n as f64;
        let threshold = ((nf * (2.0 * nf).log2()).sqrt().ceil() as usize).clamp(1, n.max(1));
        let mut fields = Self { base: vec![0.0; n], pending: Vec::with_capacity(threshold), threshold, solver: FieldSolver::new(c) };
        fields.refresh(c, spins);
        fields
    }

    pub(crate) fn threshold(&self) -> usize {
        self.threshold
    }

    pub(crate) fn pending(&self) -> usize {
        self.pending.len()
    }

    #[inline]
    pub(crate) fn field(&self, c: &CouplingField, a: usize) -> f64 {
        let mut h = self.base[a];
        for &(k, delta) in &self.pending {
            h += c.u(a, k) * delta;
        }
        h
    }

    /// Record that site `k` now holds `new_spin`; refreshes when the queue is full.
    #[inline]
    pub(crate) fn record_flip(&mut self, c: &CouplingField, spins: &[i8], k: usize, new_spin: i8) {
        self.pending.push((k, 2.0 * new_spin as f64));
        if self.pending.len() >= self.threshold {
            self.refresh(c, spins);
        }
    }

    pub(crate) fn refresh(&mut self, c: &CouplingField, spins: &[i8]) {
        self.solver.compute(c, spins, &mut self.base);
        self.pending.clear();
    }

    /// `Σ_{i<j} U σ_i σ_j = ½ Σ_a σ_a h_a`; only valid right after a refresh.
    pub(crate) fn energy_from_fields(&self, spins: &[i8]) -> f64 {
        debug_assert!(self.pending.is_empty());
        let mut acc = KahanSum::new();
        for (h, &s) in self.base.iter().zip(spins) {
            acc.add(h * s as f64);
        }
        0.5 * acc.value()
    }
}
