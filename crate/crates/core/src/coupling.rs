//! The effective spin coupling
//!
//! ```text
//! U^N_ij = Σ_{k=0}^{i-1} Σ_{l=j}^{N} |l-k|^-α,     1 ≤ i < j ≤ N,
//! ```
//!
//! i.e. the sum of the walk potential over every time pair `(k, l)` whose
//! interval contains both steps `i` and `j`.
//!
//! Writing `f(d) = d^-α` (truncated at `d = N`) and the second-order tail
//! `T(m) = Σ_{d=m}^{N} (d-m+1) f(d)`, the rectangle sum collapses to
//!
//! ```text
//! U^N_ij = T(j-i+1) - T(j+1) - T(N+2-i) + T(N+2)
//! ```
//!
//! so each coupling is four table lookups and a full row is O(N). Because the
//! tail tables are truncated at `N`, every `T` is summed from its small end and
//! the differences stay well conditioned. The first-order prefix table
//! [`PrefixTable`] gives an independent O(i) route.

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::summation::{kahan_sum, KahanSum};
use crate::{Error, Result};

/// Materialize the full coupling matrix only up to this size by default.
pub const DENSE_LIMIT: usize = 2048;

/// `P[m] = Σ_{d=1}^{m} d^-α`, `P[0] = 0`, accumulated with compensated summation.
#[derive(Clone, Debug)]
pub struct PrefixTable {
    alpha: f64,
    values: Vec<f64>,
}

impl PrefixTable {
    /// Build the table up to `m = n`. With `strict`, `α ≤ 2` is rejected;
    /// otherwise it is accepted with a warning.
    pub fn build(alpha: f64, n: usize, strict: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must be positive")));
        }
        if alpha <= 2.0 {
            if strict {
                return Err(Error::InvalidParams(format!(
                    "alpha = {alpha} <= 2: the effective coupling is not summable"
                )));
            }
            log::warn!("alpha = {alpha} <= 2: the effective coupling is not summable");
        }
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut acc = KahanSum::new();
        for d in 1..=n {
            acc.add((d as f64).powf(-alpha));
            values.push(acc.value());
        }
        Ok(Self { alpha, values })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, m: usize) -> f64 {
        self.values[m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `K_N = Σ_{d=1}^{N} (N+1-d) d^{1-α}`, the configuration-independent part of
/// the walk energy.
pub fn constant_k(p: &ModelParams) -> f64 {
    let n = p.n;
    kahan_sum((1..=n).map(|d| (n + 1 - d) as f64 * (d as f64).powf(1.0 - p.alpha)))
}

/// The effective coupling `U^N` for one `(N, α)`.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Clone, Debug)]
pub struct CouplingField {
    params: ModelParams,
    prefix: PrefixTable,
    /// `S(m) = Σ_{d=m}^{N} d^-α` for `m = 0..=N+2`, zero for `m > N`.
    tail1: Vec<f64>,
    /// `T(m)` for `m = 0..=N+2`, zero for `m > N`.
    tail2: Vec<f64>,
    dense: Option<Vec<f64>>,
}

impl CouplingField {
    /// Lazy field: couplings are evaluated on demand from the tail table.
    pub fn new(params: ModelParams) -> Self {
        let n = params.n;
        let alpha = params.alpha;
        let prefix = PrefixTable::build(alpha, n, false).expect("validated params");

        let mut tail1 = vec![0.0; n + 3];
        let mut acc = KahanSum::new();
        for d in (1..=n).rev() {
            acc.add((d as f64).powf(-alpha));
            tail1[d] = acc.value();
        }
        let mut tail2 = vec![0.0; n + 3];
        let mut acc = KahanSum::new();
        for m in (1..=n).rev() {
            acc.add(tail1[m]);
            tail2[m] = acc.value();
        }
        Self { params, prefix, tail1, tail2, dense: None }
    }

    /// Field with the full `N × N` matrix materialized.
    pub fn dense(params: ModelParams) -> Self {
        let mut field = Self::new(params);
        field.materialize();
        field
    }

    /// Materialize the full matrix when `N ≤ DENSE_LIMIT`.
    pub fn with_default_storage(params: ModelParams) -> Self {
        if params.n <= DENSE_LIMIT {
            Self::dense(params)
        } else {
            Self::new(params)
        }
    }

    fn materialize(&mut self) {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            self.fill_row_lazy(a, &mut m[a * n..(a + 1) * n]);
        }
        self.dense = Some(m);
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn prefix(&self) -> &PrefixTable {
        &self.prefix
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// `T(m) = Σ_{d=m}^{N} (d-m+1) d^-α`, zero for `m > N`.
    #[inline]
    pub fn tail2(&self, m: usize) -> f64 {
        self.tail2[m]
    }

    /// Tightest translation-invariant majorant: `max_{|i-j|=d} U^N_ij ≤ T(d+1)`.
    #[inline]
    pub fn envelope(&self, d: usize) -> f64 {
        self.tail2[d + 1]
    }

    /// `U^N_ij` for 1-based sites `i ≠ j` in either order.
    pub fn coupling(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        if i == j || i == 0 || j == 0 || i > n || j > n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        Ok(self.u(i - 1, j - 1))
    }

    /// `U` between 0-based sites, zero on the diagonal. No bounds checks
    /// beyond slice indexing.
    #[inline]
    pub fn u(&self, a: usize, b: usize) -> f64 {
        if let Some(m) = &self.dense {
            return m[a * self.params.n + b];
        }
        self.u_lazy(a, b)
    }

    #[inline]
    fn u_lazy(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if lo == hi {
            return 0.0;
        }
        let n = self.params.n;
        let t = &self.tail2;
        (t[hi - lo + 1] - t[hi + 2]) - t[n + 1 - lo]
    }

    /// Row `(U^N_ij)_j` for the 1-based site `i`; the diagonal entry is 0.
    pub fn coupling_row(&self, i: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { i, j: i, n });
        }
        let mut row = vec![0.0; n];
        self.fill_row(i - 1, &mut row);
        Ok(row)
    }

    /// Fill `out` with the row of 0-based site `a`.
    pub fn fill_row(&self, a: usize, out: &mut [f64]) {
        let n = self.n();
        if let Some(m) = &self.dense {
            out.copy_from_slice(&m[a * n..(a + 1) * n]);
        } else {
            self.fill_row_lazy(a, out);
        }
    }

    fn fill_row_lazy(&self, a: usize, out: &mut [f64]) {
        let n = self.n();
        let t = &self.tail2;
        for (b, slot) in out.iter_mut().enumerate().take(a) {
            *slot = (t[a - b + 1] - t[a + 2]) - t[n + 1 - b];
        }
        out[a] = 0.0;
        let right = t[n + 1 - a];
        for (b, slot) in out.iter_mut().enumerate().skip(a + 1) {
            *slot = (t[b - a + 1] - t[b + 2]) - right;
        }
    }

    /// `U^N_ij` as `Σ_{k=0}^{i-1} [P(N-k) - P(j-1-k)]`, O(i). Each difference
    /// is taken between first-order tails, `S(j-k) - S(N-k+1)`, which keeps
    /// full relative precision when the summed range is far out.
    pub fn coupling_via_prefix(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        if i == j || i == 0 || j == 0 || i > n || j > n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let s = &self.tail1;
        Ok(kahan_sum((0..i).map(|k| s[j - k] - s[n - k + 1])))
    }

    /// `Σ_{i<j} U^N_ij σ_i σ_j` for spins given as a slice of ±1.
    pub fn pair_energy(&self, spins: &[i8]) -> f64 {
        let n = self.n();
        assert_eq!(spins.len(), n);
        let mut row = vec![0.0; n];
        let mut acc = KahanSum::new();
        for a in 0..n {
            self.fill_row(a, &mut row);
            let h: f64 = row[a + 1..]
                .iter()
                .zip(&spins[a + 1..])
                .map(|(u, &s)| u * s as f64)
                .sum();
            acc.add(spins[a] as f64 * h);
        }
        acc.value()
    }

    /// `Σ_{i<j} U^N_ij`, the energy of either fully aligned state.
    pub fn total_coupling(&self) -> f64 {
        self.pair_energy(&vec![1; self.n()])
    }
}

/// Empirical constants of the bulk sandwich
/// `c₁ |i-j|^{2-α} ≤ U^N_ij ≤ c₂ |i-j|^{2-α}` for `i, j ∈ [εN, (1-ε)N]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub c1_hat: f64,
    pub c2_hat: f64,
    /// Bulk pairs examined (all of them up to `N = 2048`, a row subsample above).
    pub bulk_pairs: usize,
    /// Pairs outside the bulk examined against `0 ≤ U ≤ c₂ |i-j|^{2-α}`.
    pub outside_pairs: usize,
    pub outside_violations: usize,
    /// Largest `U |i-j|^{α-2}` seen outside the bulk.
    pub outside_max_ratio: f64,
    /// First few offending 1-based pairs, if any.
    pub violation_examples: Vec<(usize, usize)>,
}

impl BoundFit {
    pub fn spread(&self) -> f64 {
        self.c2_hat / self.c1_hat
    }
}

/// Default bulk margin.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Above this size bound fitting subsamples bulk rows.
pub const FIT_EXHAUSTIVE_LIMIT: usize = 2048;

/// 1-based bulk sites `⌈εN⌉ ..= ⌊(1-ε)N⌋`.
pub fn bulk_range(n: usize, epsilon: f64) -> Result<std::ops::RangeInclusive<usize>> {
    let nf = n as f64;
    if !(epsilon > 0.0 && epsilon < 0.5) || epsilon * nf < 2.0 {
        return Err(Error::EmptyBulk { epsilon, n });
    }
    let lo = (epsilon * nf).ceil() as usize;
    let hi = ((1.0 - epsilon) * nf).floor() as usize;
    if hi <= lo {
        return Err(Error::EmptyBulk { epsilon, n });
    }
    Ok(lo..=hi)
}

/// Fit `c₁, c₂` as the min/max of `U^N_ij |i-j|^{α-2}` over bulk pairs and
/// check the one-sided bound outside the bulk.
pub fn fit_bounds(c: &CouplingField, epsilon: f64) -> Result<BoundFit> {
    let n = c.n();
    let alpha = c.alpha();
    let bulk = bulk_range(n, epsilon)?;
    let (lo, hi) = (*bulk.start(), *bulk.end());
    let stride = n.div_ceil(FIT_EXHAUSTIVE_LIMIT).max(1);
    let scale: Vec<f64> = (0..n).map(|d| (d as f64).powf(alpha - 2.0)).collect();
    let sampled = |i: usize| stride == 1 || i.is_multiple_of(stride) || i == 1 || i == n || i == lo || i == hi;

    let mut row = vec![0.0; n];
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    let mut bulk_pairs = 0;
    for i in bulk.clone().filter(|&i| sampled(i)) {
        c.fill_row(i - 1, &mut row);
        for j in i + 1..=hi {
            let r = row[j - 1] * scale[j - i];
            c1 = c1.min(r);
            c2 = c2.max(r);
            bulk_pairs += 1;
        }
    }
    if bulk_pairs == 0 {
        return Err(Error::EmptyBulk { epsilon, n });
    }

    let in_bulk = |k: usize| k >= lo && k <= hi;
    let mut outside_pairs = 0;
    let mut outside_violations = 0;
    let mut outside_max_ratio = 0.0f64;
    let mut violation_examples = Vec::new();
    for i in (1..n).filter(|&i| sampled(i)) {
        c.fill_row(i - 1, &mut row);
        for j in i + 1..=n {
            if in_bulk(i) && in_bulk(j) {
                continue;
            }
            outside_pairs += 1;
            let u = row[j - 1];
            let r = u * scale[j - i];
            outside_max_ratio = outside_max_ratio.max(r);
            if u < 0.0 || r > c2 {
                outside_violations += 1;
                if violation_examples.len() < 16 {
                    violation_examples.push((i, j));
                }
            }
        }
    }

    Ok(BoundFit {
        n,
        alpha,
        epsilon,
        c1_hat: c1,
        c2_hat: c2,
        bulk_pairs,
        outside_pairs,
        outside_violations,
        outside_max_ratio,
        violation_examples,
    })
}
