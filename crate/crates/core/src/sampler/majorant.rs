//! Translation-invariant majorant `Ū(d) = c_maj d^{2-α}` of the coupling,
//! used to propose cluster bonds in time proportional to the number of
//! proposals rather than N.
//!
//! Since `U_ij ≤ T(|i-j|+1)` for every pair (the coupling is a rectangle sum
//! inside the quadrant summed by `T`), the smallest valid power-law constant is
//! `sup_d T(d+1) d^{α-2}`, which is computed exactly in O(N).

use crate::coupling::{BoundFit, CouplingField, FIT_EXHAUSTIVE_LIMIT};
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Relative slack added on top of the exact supremum to absorb rounding.
const SLACK: f64 = 1e-9;

/// Pairs checked by the sampled verification above `FIT_EXHAUSTIVE_LIMIT`.
const VERIFY_SAMPLE_ROWS: usize = 256;

#[derive(Clone, Debug)]
pub struct Majorant {
    c_maj: f64,
    /// `Ū(d)` for `d = 0..N` (index 0 unused).
    bound: Vec<f64>,
    /// `C(r) = Σ_{d=1}^{r} Ū(d)`, `C(0) = 0`.
    cumulative: Vec<f64>,
}

impl Majorant {
    /// Majorant starting from `c_start` (typically the fitted `c₂`), raised to
    /// the exact supremum ratio where needed, then verified pairwise.
    pub fn new(c: &CouplingField, c_start: Option<f64>) -> Result<Self> {
        let n = c.n();
        let alpha = c.alpha();
        let sup = (1..n)
            .map(|d| c.envelope(d) * (d as f64).powf(alpha - 2.0))
            .fold(0.0f64, f64::max);
        let c_maj = c_start.unwrap_or(0.0).max(sup) * (1.0 + SLACK);
        let c_maj = if c_maj > 0.0 { c_maj } else { 1.0 };

        let mut bound = vec![0.0; n.max(1)];
        let mut cumulative = vec![0.0; n.max(1)];
        let mut acc = KahanSum::new();
        for d in 1..n {
            bound[d] = c_maj * (d as f64).powf(2.0 - alpha);
            acc.add(bound[d]);
            cumulative[d] = acc.value();
        }
        let majorant = Self { c_maj, bound, cumulative };
        majorant.verify(c)?;
        Ok(majorant)
    }

    pub fn from_fit(c: &CouplingField, fit: &BoundFit) -> Result<Self> {
        Self::new(c, Some(fit.c2_hat))
    }

    pub fn c_maj(&self) -> f64 {
        self.c_maj
    }

    #[inline]
    pub fn bound(&self, d: usize) -> f64 {
        self.bound[d]
    }

    #[inline]
    pub(crate) fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Check `U_ij ≤ Ū(|i-j|)` on every pair up to `N = 2048`, on a row sample above.
    pub fn verify(&self, c: &CouplingField) -> Result<()> {
        let n = c.n();
        let stride = if n <= FIT_EXHAUSTIVE_LIMIT { 1 } else { n.div_ceil(VERIFY_SAMPLE_ROWS) };
        let mut row = vec![0.0; n];
        for a in (0..n).step_by(stride).chain([n / 2, n - 1]) {
            c.fill_row(a, &mut row);
            for (b, &u) in row.iter().enumerate().skip(a + 1) {
                let bound = self.bound[b - a];
                if u > bound {
                    return Err(Error::MajorantViolation { i: a + 1, j: b + 1, coupling: u, bound });
                }
            }
        }
        Ok(())
    }
}
