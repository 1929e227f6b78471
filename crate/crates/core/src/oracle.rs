//! Exact enumeration of the walk ensemble (4^N walks) and of the spin chain
//! (2^N states) at small N. These are the reference values every other module
//! is tested against.
//!
//! Boltzmann factors are accumulated with a fixed shift equal to the largest
//! attainable energy (the straight walk, resp. the aligned chain), so every
//! accumulated weight lies in `(0, 1]` and `log Z` is recovered exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{constant_k, CouplingField};
use crate::model::{walk_energy, walk_to_spins, ModelParams, SpinChain, Step, Walk};
use crate::summation::KahanSum;
use crate::{Error, Result};

pub const WALK_CAP: usize = 12;
pub const SPIN_CAP: usize = 20;
pub const SPIN_DISTRIBUTION_CAP: usize = 12;
pub const WALK_DISTRIBUTION_CAP: usize = 8;
pub const GRIFFITHS_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Walk,
    Spin,
}

/// Exact ensemble averages.
///
/// For the walk ensemble `mean_m_sq` is `⟨M_σ²⟩` of the first spin chain under
/// the walk measure; for the spin ensemble `mean_omega_sq` equals `mean_m_sq`
/// (the second chain is an independent copy) and `corr` holds `⟨σ_i σ_j⟩`
/// row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub ensemble: Ensemble,
    pub params: ModelParams,
    pub log_z: f64,
    pub mean_omega_sq: f64,
    pub mean_m_sq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<Vec<f64>>,
}

impl ExactResult {
    pub fn corr_at(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.params.n;
        self.corr.as_ref().map(|c| c[(i - 1) * n + (j - 1)])
    }
}

fn check_cap(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { what, n, cap });
    }
    Ok(())
}

/// Energy of the straight walk, the maximum of `E` over all walks.
fn straight_energy(n: usize, alpha: f64) -> f64 {
    let mut acc = KahanSum::new();
    for d in 1..=n {
        acc.add((n + 1 - d) as f64 * (d as f64).powf(2.0 - alpha));
    }
    acc.value()
}

#[derive(Default, Clone, Copy)]
struct WalkSums {
    z: KahanSum,
    omega2: KahanSum,
    m2: KahanSum,
}

struct WalkDfs {
    n: usize,
    beta: f64,
    shift: f64,
    decay: Vec<f64>,
    pos: Vec<(i64, i64)>,
}

impl WalkDfs {
    fn visit(&mut self, depth: usize, energy: f64, m: i64, sums: &mut WalkSums) {
        if depth == self.n {
            let w = (self.beta * energy - self.shift).exp();
            let (x, y) = self.pos[depth];
            sums.z.add(w);
            sums.omega2.add(w * (x * x + y * y) as f64);
            sums.m2.add(w * (m * m) as f64);
            return;
        }
        for step in Step::ALL {
            let (dx, dy) = step.delta();
            let (x, y) = self.pos[depth];
            let next = (x + dx, y + dy);
            let de = self.energy_gain(depth + 1, next);
            self.pos[depth + 1] = next;
            self.visit(depth + 1, energy + de, m + step.spins().0 as i64, sums);
        }
    }

    /// `Σ_{i<t} f(t-i) |ω_t - ω_i|²` for the new point `ω_t`.
    fn energy_gain(&self, t: usize, p: (i64, i64)) -> f64 {
        let mut s = 0.0;
        for i in 0..t {
            let (dx, dy) = ((p.0 - self.pos[i].0) as f64, (p.1 - self.pos[i].1) as f64);
            s += self.decay[t - i] * (dx * dx + dy * dy);
        }
        s
    }
}

/// Exact `Z_N`, `⟨ω_N²⟩` and `⟨M_σ²⟩` by summing over all `4^N` walks.
///
/// The state space is partitioned on the first two steps and the partial sums
/// are merged in a fixed order, so the result does not depend on scheduling.
pub fn enumerate_walks(p: &ModelParams) -> Result<ExactResult> {
    p.validate()?;
    check_cap("walk enumeration", p.n, WALK_CAP)?;
    let n = p.n;
    let decay: Vec<f64> = (0..=n).map(|d| if d == 0 { 0.0 } else { (d as f64).powf(-p.alpha) }).collect();
    let shift = p.beta * straight_energy(n, p.alpha);
    let prefix_len = n.min(2);
    let prefixes: Vec<Vec<Step>> = (0..4usize.pow(prefix_len as u32))
        .map(|code| (0..prefix_len).map(|k| Step::ALL[(code >> (2 * k)) & 3]).collect())
        .collect();

    let partials: Vec<WalkSums> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut dfs = WalkDfs { n, beta: p.beta, shift, decay: decay.clone(), pos: vec![(0, 0); n + 1] };
            let mut energy = 0.0;
            let mut m = 0;
            for (k, step) in prefix.iter().enumerate() {
                let (x, y) = dfs.pos[k];
                let (dx, dy) = step.delta();
                let next = (x + dx, y + dy);
                energy += dfs.energy_gain(k + 1, next);
                dfs.pos[k + 1] = next;
                m += step.spins().0 as i64;
            }
            let mut sums = WalkSums::default();
            dfs.visit(prefix_len, energy, m, &mut sums);
            sums
        })
        .collect();

    let (mut z, mut omega2, mut m2) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for s in &partials {
        z.add(s.z.value());
        omega2.add(s.omega2.value());
        m2.add(s.m2.value());
    }
    let z = z.value();
    Ok(ExactResult {
        ensemble: Ensemble::Walk,
        params: *p,
        log_z: z.ln() + shift,
        mean_omega_sq: omega2.value() / z,
        mean_m_sq: m2.value() / z,
        corr: None,
    })
}

/// Normalized walk probabilities indexed by step code: step `k` (0-based) is
/// `Step::ALL[(code >> 2k) & 3]`.
pub fn walk_distribution(p: &ModelParams) -> Result<Vec<f64>> {
    p.validate()?;
    check_cap("walk distribution", p.n, WALK_DISTRIBUTION_CAP)?;
    let shift = p.beta * straight_energy(p.n, p.alpha);
    let mut w: Vec<f64> =
        (0..4usize.pow(p.n as u32)).map(|code| (p.beta * walk_energy(&walk_from_code(code, p.n), p.alpha) - shift).exp()).collect();
    normalize(&mut w);
    Ok(w)
}

pub fn walk_from_code(code: usize, n: usize) -> Walk {
    let steps: Vec<Step> = (0..n).map(|k| Step::ALL[(code >> (2 * k)) & 3]).collect();
    Walk::from_steps(&steps)
}

fn normalize(w: &mut [f64]) {
    let mut z = KahanSum::new();
    z.extend(w.iter().copied());
    let z = z.value();
    w.iter_mut().for_each(|x| *x /= z);
}

/// A dense symmetric coupling matrix with zero diagonal.
#[derive(Clone, Debug)]
pub struct DenseCouplings {
    n: usize,
    m: Vec<f64>,
}

impl DenseCouplings {
    pub fn from_field(c: &CouplingField) -> Self {
        let n = c.n();
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            c.fill_row(a, &mut m[a * n..(a + 1) * n]);
        }
        Self { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i - 1) * self.n + (j - 1)]
    }

    /// Multiply the coupling of the 1-based pair `(i, j)` by `factor`.
    pub fn scale_pair(&mut self, i: usize, j: usize, factor: f64) {
        let n = self.n;
        self.m[(i - 1) * n + (j - 1)] *= factor;
        self.m[(j - 1) * n + (i - 1)] *= factor;
    }

    pub fn scale_all(&mut self, factor: f64) {
        self.m.iter_mut().for_each(|x| *x *= factor);
    }

    fn energy(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for a in 0..n {
            let row = &self.m[a * n..(a + 1) * n];
            e += s[a] * row[a + 1..].iter().zip(&s[a + 1..]).map(|(u, x)| u * x).sum::<f64>();
        }
        e
    }

    fn field(&self, s: &[f64], a: usize) -> f64 {
        let n = self.n;
        self.m[a * n..(a + 1) * n].iter().zip(s).map(|(u, x)| u * x).sum::<f64>()
    }

    fn abs_total(&self) -> f64 {
        self.m.iter().map(|x| x.abs()).sum::<f64>() / 2.0
    }
}

/// Visit every spin state in Gray-code order, passing the state mask, the spins
/// and the energy `Σ_{i<j} U σ_i σ_j`. Each transition costs O(N).
fn gray_sweep(u: &DenseCouplings, mut visit: impl FnMut(u64, &[f64], f64)) {
    let n = u.n();
    let mut s = vec![-1.0; n];
    let mut e = u.energy(&s);
    let mut mask = 0u64;
    visit(mask, &s, e);
    for k in 1..(1u64 << n) {
        let b = k.trailing_zeros() as usize;
        e -= 2.0 * s[b] * u.field(&s, b);
        s[b] = -s[b];
        mask ^= 1 << b;
        visit(mask, &s, e);
    }
}

struct SpinMoments {
    log_z: f64,
    mean_m_sq: f64,
    corr: Vec<f64>,
}

fn spin_moments(u: &DenseCouplings, beta: f64) -> SpinMoments {
    let n = u.n();
    let shift = beta * u.abs_total();
    let mut z = KahanSum::new();
    let mut m2 = KahanSum::new();
    let mut pair = vec![0.0; n * n];
    gray_sweep(u, |_, s, e| {
        let w = (beta * e - shift).exp();
        z.add(w);
        let m: f64 = s.iter().sum();
        m2.add(w * m * m);
        for a in 0..n {
            let ws = w * s[a];
            for b in a + 1..n {
                pair[a * n + b] += ws * s[b];
            }
        }
    });
    let z = z.value();
    let mut corr = vec![0.0; n * n];
    for a in 0..n {
        corr[a * n + a] = 1.0;
        for b in a + 1..n {
            let v = pair[a * n + b] / z;
            corr[a * n + b] = v;
            corr[b * n + a] = v;
        }
    }
    SpinMoments { log_z: z.ln() + shift, mean_m_sq: m2.value() / z, corr }
}

/// Exact spin-chain averages under `exp(β Σ_{i<j} U^N_ij σ_i σ_j)` with free
/// boundaries, over all `2^N` states.
pub fn enumerate_spins(p: &ModelParams, c: &CouplingField) -> Result<ExactResult> {
    p.validate()?;
    check_cap("spin enumeration", p.n, SPIN_CAP)?;
    if c.n() != p.n {
        return Err(Error::LengthMismatch { expected: p.n, got: c.n() });
    }
    let m = spin_moments(&DenseCouplings::from_field(c), p.beta);
    Ok(ExactResult {
        ensemble: Ensemble::Spin,
        params: *p,
        log_z: m.log_z,
        mean_omega_sq: m.mean_m_sq,
        mean_m_sq: m.mean_m_sq,
        corr: Some(m.corr),
    })
}

/// Boltzmann probabilities of all `2^N` spin states, indexed by the mask of
/// [`SpinChain::to_mask`].
pub fn exact_distribution(p: &ModelParams, c: &CouplingField) -> Result<Vec<f64>> {
    p.validate()?;
    check_cap("spin distribution", p.n, SPIN_DISTRIBUTION_CAP)?;
    if c.n() != p.n {
        return Err(Error::LengthMismatch { expected: p.n, got: c.n() });
    }
    let u = DenseCouplings::from_field(c);
    let shift = p.beta * u.abs_total();
    let mut w = vec![0.0; 1 << p.n];
    gray_sweep(&u, |mask, _, e| w[mask as usize] = (p.beta * e - shift).exp());
    normalize(&mut w);
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `⟨σ_i σ_j⟩ < 0`
    Negative,
    /// `⟨σ_i σ_j⟩` decreased when `β` increased.
    BetaMonotonicity,
    /// `⟨σ_i σ_j⟩` decreased when couplings were increased.
    CouplingMonotonicity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriffithsViolation {
    pub kind: ViolationKind,
    pub beta: f64,
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub reference: f64,
    /// Which coupling change was applied, for coupling monotonicity.
    pub perturbation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriffithsReport {
    pub n: usize,
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub coupling_scale: f64,
    /// Row-major `⟨σ_i σ_j⟩` for each grid value.
    pub correlations: Vec<Vec<f64>>,
    pub violations: Vec<GriffithsViolation>,
}

impl GriffithsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack for exact comparisons of enumerated correlations.
pub const GRIFFITHS_TOL: f64 = 1e-12;

/// Check by enumeration that, on the given β grid, correlations are
/// nonnegative, nondecreasing in β, and nondecreasing when couplings grow:
/// all couplings scaled by `coupling_scale`, and single couplings (nearest
/// neighbour, longest range, central pair) scaled one at a time.
pub fn griffiths_check(
    p: &ModelParams,
    c: &CouplingField,
    beta_grid: &[f64],
    coupling_scale: f64,
) -> Result<GriffithsReport> {
    p.validate()?;
    check_cap("Griffiths check", p.n, GRIFFITHS_CAP)?;
    if c.n() != p.n {
        return Err(Error::LengthMismatch { expected: p.n, got: c.n() });
    }
    if beta_grid.iter().any(|b| !(b.is_finite() && *b >= 0.0)) || beta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("beta grid must be nonnegative and strictly increasing".into()));
    }
    if !(coupling_scale.is_finite() && coupling_scale >= 1.0) {
        return Err(Error::InvalidParams(format!("coupling scale {coupling_scale} must be >= 1")));
    }
    let n = p.n;
    let base = DenseCouplings::from_field(c);

    let mut perturbed: Vec<(String, DenseCouplings)> = Vec::new();
    let mut all = base.clone();
    all.scale_all(coupling_scale);
    perturbed.push((format!("all x{coupling_scale}"), all));
    if n >= 2 {
        let mid = n / 2;
        let mut pairs = vec![(1, 2), (1, n), (mid.max(1), (mid + 1).min(n))];
        pairs.sort_unstable();
        pairs.dedup();
        for (i, j) in pairs.into_iter().filter(|(i, j)| i != j) {
            let mut m = base.clone();
            m.scale_pair(i, j, coupling_scale);
            perturbed.push((format!("U({i},{j}) x{coupling_scale}"), m));
        }
    }

    let mut violations = Vec::new();
    let mut correlations: Vec<Vec<f64>> = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let corr = spin_moments(&base, beta).corr;
        for i in 1..=n {
            for j in i + 1..=n {
                let v = corr[(i - 1) * n + (j - 1)];
                if v < -GRIFFITHS_TOL {
                    violations.push(GriffithsViolation {
                        kind: ViolationKind::Negative,
                        beta,
                        i,
                        j,
                        value: v,
                        reference: 0.0,
                        perturbation: None,
                    });
                }
            }
        }
        if let Some(prev) = correlations.last() {
            push_decreases(&mut violations, ViolationKind::BetaMonotonicity, beta, n, &corr, prev, None);
        }
        for (label, m) in &perturbed {
            let stronger = spin_moments(m, beta).corr;
            push_decreases(&mut violations, ViolationKind::CouplingMonotonicity, beta, n, &stronger, &corr, Some(label));
        }
        correlations.push(corr);
    }

    Ok(GriffithsReport {
        n,
        alpha: p.alpha,
        betas: beta_grid.to_vec(),
        coupling_scale,
        correlations,
        violations,
    })
}

fn push_decreases(
    out: &mut Vec<GriffithsViolation>,
    kind: ViolationKind,
    beta: f64,
    n: usize,
    now: &[f64],
    before: &[f64],
    perturbation: Option<&String>,
) {
    for i in 1..=n {
        for j in i + 1..=n {
            let k = (i - 1) * n + (j - 1);
            if now[k] < before[k] - GRIFFITHS_TOL {
                out.push(GriffithsViolation {
                    kind,
                    beta,
                    i,
                    j,
                    value: now[k],
                    reference: before[k],
                    perturbation: perturbation.cloned(),
                });
            }
        }
    }
}

/// Largest `|E(ω) - S(σ) - S(σ̃) - K_N|` over all walks of length `N`.
pub fn energy_identity_deviation(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_cap("energy identity", p.n, WALK_DISTRIBUTION_CAP)?;
    let c = CouplingField::new(*p);
    let k = constant_k(p);
    let u = DenseCouplings::from_field(&c);
    let spin_e = |s: &SpinChain| u.energy(&s.as_slice().iter().map(|&x| x as f64).collect::<Vec<_>>());
    let mut worst = 0.0f64;
    for code in 0..4usize.pow(p.n as u32) {
        let w = walk_from_code(code, p.n);
        let (s, st) = walk_to_spins(&w);
        let dev = (walk_energy(&w, p.alpha) - (spin_e(&s) + spin_e(&st) + k)).abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Largest relative deviation `|P(ω) - P(σ) P(σ̃)| / P(ω)` over all walks.
pub fn factorization_deviation(p: &ModelParams) -> Result<f64> {
    let walk_p = walk_distribution(p)?;
    let c = CouplingField::new(*p);
    let spin_p = exact_distribution(p, &c)?;
    let mut worst = 0.0f64;
    for (code, &pw) in walk_p.iter().enumerate() {
        let (s, st) = walk_to_spins(&walk_from_code(code, p.n));
        let prod = spin_p[s.to_mask() as usize] * spin_p[st.to_mask() as usize];
        worst = worst.max((pw - prod).abs() / pw);
    }
    Ok(worst)
}

/// Relative difference between the walk-side `⟨ω_N²⟩` and spin-side `⟨M²⟩`.
pub fn equivalence_diff(walk: &ExactResult, spin: &ExactResult) -> f64 {
    (walk.mean_omega_sq - spin.mean_m_sq).abs() / walk.mean_omega_sq.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(n, alpha, beta).unwrap()
    }

    fn field(p: &ModelParams) -> CouplingField {
        CouplingField::new(*p)
    }

    #[test]
    fn free_walk_anchors() {
        let r = enumerate_walks(&params(4, 3.5, 0.0)).unwrap();
        assert!((r.mean_omega_sq - 4.0).abs() < 1e-12);
        let r = enumerate_walks(&params(1, 3.5, 0.0)).unwrap();
        assert!((r.mean_omega_sq - 1.0).abs() < 1e-15);
        assert!((r.log_z.exp() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_step_walks_closed_form() {
        // straight E = 2.25 (4 walks, |ω|² = 4), bent E = 2.125 (8 walks, |ω|² = 2),
        // reversal E = 2 (4 walks, |ω|² = 0)
        for beta in [0.5f64, 50.0, 200.0] {
            let (b, r) = ((-0.125 * beta).exp(), (-0.25 * beta).exp());
            let want = (16.0 + 16.0 * b) / (4.0 + 8.0 * b + 4.0 * r);
            let got = enumerate_walks(&params(2, 4.0, beta)).unwrap().mean_omega_sq;
            assert!((got - want).abs() < 1e-12 * want, "β={beta}: {got} vs {want}");
        }
        let hot = enumerate_walks(&params(2, 4.0, 200.0)).unwrap().mean_omega_sq;
        assert!((hot - 4.0).abs() < 1e-6);
    }

    #[test]
    fn walk_cap() {
        assert!(matches!(enumerate_walks(&params(13, 3.5, 1.0)), Err(Error::CapExceeded { .. })));
        let p = params(21, 3.5, 1.0);
        assert!(matches!(enumerate_spins(&p, &field(&p)), Err(Error::CapExceeded { .. })));
        let p = params(13, 3.5, 1.0);
        assert!(exact_distribution(&p, &field(&p)).is_err());
    }

    #[test]
    fn spins_at_infinite_temperature() {
        let p = params(7, 3.5, 0.0);
        let r = enumerate_spins(&p, &field(&p)).unwrap();
        assert!((r.mean_m_sq - 7.0).abs() < 1e-12);
        for i in 1..=7 {
            for j in 1..=7 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.corr_at(i, j).unwrap() - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_spin() {
        for beta in [0.0, 1.0, 10.0] {
            let p = params(1, 3.5, beta);
            assert!((enumerate_spins(&p, &field(&p)).unwrap().mean_m_sq - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn walk_and_spin_enumerations_agree() {
        let p = params(6, 3.5, 1.0);
        let w = enumerate_walks(&p).unwrap();
        let s = enumerate_spins(&p, &field(&p)).unwrap();
        assert!(equivalence_diff(&w, &s) < 1e-10);
        // the first chain's marginal under the walk measure
        assert!((w.mean_m_sq - s.mean_m_sq).abs() < 1e-10 * s.mean_m_sq);
        // Z_walk = Z_spin² e^{β K_N}
        let k = constant_k(&p);
        assert!((w.log_z - (2.0 * s.log_z + p.beta * k)).abs() < 1e-10 * w.log_z.abs());
    }

    #[test]
    fn large_beta_does_not_overflow() {
        let p = params(12, 3.5, 5.0);
        let s = enumerate_spins(&p, &field(&p)).unwrap();
        assert!(s.log_z.is_finite() && s.mean_m_sq.is_finite());
        let p = params(8, 3.5, 500.0);
        let w = enumerate_walks(&p).unwrap();
        assert!(w.log_z.is_finite() && (w.mean_omega_sq - 64.0).abs() < 1e-6);
    }

    #[test]
    fn distribution_examples() {
        let p = params(2, 3.5, 0.0);
        let d = exact_distribution(&p, &field(&p)).unwrap();
        assert!(d.iter().all(|&x| (x - 0.25).abs() < 1e-15));

        let p = params(6, 3.5, 1.0);
        let d = exact_distribution(&p, &field(&p)).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for aligned in [0u64, 63] {
            for k in 0..6 {
                assert!(d[aligned as usize] > d[(aligned ^ (1 << k)) as usize]);
            }
        }
    }

    #[test]
    fn distribution_matches_spin_chain_masks() {
        let p = params(5, 4.0, 0.7);
        let c = field(&p);
        let d = exact_distribution(&p, &c).unwrap();
        let log_z = enumerate_spins(&p, &c).unwrap().log_z;
        for mask in 0..32u64 {
            let s = SpinChain::from_mask(mask, 5);
            assert_eq!(s.to_mask(), mask);
            let want = (p.beta * crate::model::spin_energy(&s, &c).unwrap() - log_z).exp();
            assert!((d[mask as usize] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn griffiths_small_chain() {
        let p = params(6, 3.5, 1.0);
        let r = griffiths_check(&p, &field(&p), &[0.0, 0.5, 1.0, 2.0], 1.5).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        let first = &r.correlations[0];
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(first[i * 6 + j], 0.0);
                }
            }
        }
    }

    #[test]
    fn griffiths_identity_scaling_changes_nothing() {
        let p = params(6, 3.5, 1.0);
        let c = field(&p);
        let mut scaled = DenseCouplings::from_field(&c);
        scaled.scale_all(1.0);
        let a = spin_moments(&DenseCouplings::from_field(&c), 1.0).corr;
        let b = spin_moments(&scaled, 1.0).corr;
        assert_eq!(a, b);
        assert!(griffiths_check(&p, &c, &[0.0, 1.0], 1.0).unwrap().passed());
    }

    #[test]
    fn griffiths_rejects_bad_grids() {
        let p = params(6, 3.5, 1.0);
        let c = field(&p);
        assert!(griffiths_check(&p, &c, &[1.0, 0.5], 1.5).is_err());
        assert!(griffiths_check(&p, &c, &[0.0, 1.0], 0.5).is_err());
        let p = params(15, 3.5, 1.0);
        assert!(griffiths_check(&p, &field(&p), &[0.0], 1.5).is_err());
    }

    #[test]
    fn griffiths_catches_antiferromagnetic_couplings() {
        let mut u = DenseCouplings::from_field(&field(&params(4, 3.5, 1.0)));
        u.scale_all(-1.0);
        let corr = spin_moments(&u, 2.0).corr;
        assert!(corr[1] < 0.0);
    }

    #[test]
    fn identities_hold_exactly() {
        for n in 1..=6 {
            let p = params(n, 3.5, 0.8);
            assert!(energy_identity_deviation(&p).unwrap() < 1e-12);
            assert!(factorization_deviation(&p).unwrap() < 1e-12);
        }
    }
}
