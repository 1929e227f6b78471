//! Walk and spin configurations, the bijection between them, and the two
//! energy functions.
//!
//! A step `μ_i = ω_i - ω_{i-1}` is written as
//! `μ_i = σ_i (e₁+e₂)/2 + σ̃_i (e₁-e₂)/2` with `σ_i, σ̃_i ∈ {±1}`, which maps the
//! four unit steps one-to-one onto the four spin pairs. Under this map
//!
//! ```text
//! E(ω) = S(σ) + S(σ̃) + K_N,        |ω_N|² = (M_σ² + M_σ̃²) / 2,
//! ```
//!
//! where `S(σ) = Σ_{i<j} U^N_ij σ_i σ_j` and `K_N` does not depend on the walk.

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingField;
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Parameters of the walk ensemble: `N` steps, decay exponent `α` and inverse
/// temperature `β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { n, alpha, beta };
        p.validate()?;
        if !p.in_standard_range() {
            log::warn!("alpha = {alpha} lies outside 3 < alpha <= 4; the phase transition is only established inside that range");
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParams(format!("beta = {} must be finite and >= 0", self.beta)));
        }
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::InvalidParams(format!("alpha = {} must be finite and > 2", self.alpha)));
        }
        Ok(())
    }

    /// `3 < α ≤ 4`, where the diffusive-ballistic transition is established.
    pub fn in_standard_range(&self) -> bool {
        self.alpha > 3.0 && self.alpha <= 4.0
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }
}

/// A unit lattice step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    /// `+e₁`
    East,
    /// `+e₂`
    North,
    /// `-e₁`
    West,
    /// `-e₂`
    South,
}

impl Step {
    pub const ALL: [Step; 4] = [Step::East, Step::North, Step::West, Step::South];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::East => (1, 0),
            Step::North => (0, 1),
            Step::West => (-1, 0),
            Step::South => (0, -1),
        }
    }

    pub fn from_delta(dx: i64, dy: i64) -> Option<Self> {
        match (dx, dy) {
            (1, 0) => Some(Step::East),
            (0, 1) => Some(Step::North),
            (-1, 0) => Some(Step::West),
            (0, -1) => Some(Step::South),
            _ => None,
        }
    }

    /// The spin pair `(σ, σ̃)` of this step.
    pub fn spins(self) -> (i8, i8) {
        match self {
            Step::East => (1, 1),
            Step::North => (1, -1),
            Step::West => (-1, -1),
            Step::South => (-1, 1),
        }
    }

    pub fn from_spins(s: i8, st: i8) -> Option<Self> {
        match (s, st) {
            (1, 1) => Some(Step::East),
            (1, -1) => Some(Step::North),
            (-1, -1) => Some(Step::West),
            (-1, 1) => Some(Step::South),
            _ => None,
        }
    }
}

/// The increments `μ_1, ..., μ_N` of a walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepIncrements(pub Vec<Step>);

impl StepIncrements {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Walk with these increments, rooted at the origin.
    pub fn to_walk(&self) -> Walk {
        let mut positions = Vec::with_capacity(self.0.len() + 1);
        let (mut x, mut y) = (0i64, 0i64);
        positions.push((x, y));
        for step in &self.0 {
            let (dx, dy) = step.delta();
            x += dx;
            y += dy;
            positions.push((x, y));
        }
        Walk { positions }
    }
}

/// An origin-rooted nearest-neighbour path `ω_0, ..., ω_N` in Z².
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    positions: Vec<(i64, i64)>,
}

impl Walk {
    pub fn from_positions(positions: Vec<(i64, i64)>) -> Result<Self> {
        match positions.first() {
            None => return Err(Error::InvalidWalk("a walk has at least one position".into())),
            Some(&p) if p != (0, 0) => {
                return Err(Error::InvalidWalk(format!("walk starts at {p:?}, not the origin")))
            }
            _ => {}
        }
        for (k, w) in positions.windows(2).enumerate() {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if Step::from_delta(dx, dy).is_none() {
                return Err(Error::InvalidWalk(format!(
                    "step {} is ({dx}, {dy}), not a unit lattice step",
                    k + 1
                )));
            }
        }
        Ok(Self { positions })
    }

    pub fn from_steps(steps: &[Step]) -> Self {
        StepIncrements(steps.to_vec()).to_walk()
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> &[(i64, i64)] {
        &self.positions
    }

    pub fn endpoint(&self) -> (i64, i64) {
        *self.positions.last().expect("walk is never empty")
    }

    pub fn steps(&self) -> StepIncrements {
        StepIncrements(
            self.positions
                .windows(2)
                .map(|w| Step::from_delta(w[1].0 - w[0].0, w[1].1 - w[0].1).expect("validated walk"))
                .collect(),
        )
    }
}

/// A chain of `N` Ising spins.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinChain(Vec<i8>);

impl SpinChain {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(k) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpins(format!("spin {} has value {}", k + 1, spins[k])));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Spin configuration encoded by the low `n` bits of `mask`; bit `k` set
    /// means spin `k+1` is up.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self((0..n).map(|k| if mask >> k & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (k, &s)| if s == 1 { m | 1 << k } else { m })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| s as i64).sum()
    }
}

/// Split a walk into its two spin chains.
pub fn walk_to_spins(w: &Walk) -> (SpinChain, SpinChain) {
    let (s, st): (Vec<i8>, Vec<i8>) = w.steps().0.into_iter().map(Step::spins).unzip();
    (SpinChain(s), SpinChain(st))
}

/// Rebuild the walk from its two spin chains.
pub fn spins_to_walk(s: &SpinChain, st: &SpinChain) -> Result<Walk> {
    if s.len() != st.len() {
        return Err(Error::LengthMismatch { expected: s.len(), got: st.len() });
    }
    let steps = s
        .0
        .iter()
        .zip(&st.0)
        .map(|(&a, &b)| Step::from_spins(a, b).expect("validated spins"))
        .collect();
    Ok(StepIncrements(steps).to_walk())
}

/// `|ω_N|²`.
pub fn end_to_end_sq(w: &Walk) -> u64 {
    let (x, y) = w.endpoint();
    (x * x + y * y) as u64
}

/// `E(ω) = Σ_{0≤i<j≤N} |i-j|^-α |ω_i - ω_j|²`, the exponent of the walk
/// weight without the factor `β`.
pub fn walk_energy(w: &Walk, alpha: f64) -> f64 {
    let pos = w.positions();
    let n = w.len();
    let decay: Vec<f64> = (0..=n).map(|d| if d == 0 { 0.0 } else { (d as f64).powf(-alpha) }).collect();
    let mut acc = KahanSum::new();
    for j in 1..pos.len() {
        for i in 0..j {
            let dx = (pos[j].0 - pos[i].0) as f64;
            let dy = (pos[j].1 - pos[i].1) as f64;
            acc.add(decay[j - i] * (dx * dx + dy * dy));
        }
    }
    acc.value()
}

/// `S(σ) = -H⁰(σ) = Σ_{1≤i<j≤N} U^N_ij σ_i σ_j`.
pub fn spin_energy(s: &SpinChain, c: &CouplingField) -> Result<f64> {
    if s.len() != c.n() {
        return Err(Error::LengthMismatch { expected: c.n(), got: s.len() });
    }
    Ok(c.pair_energy(s.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Step::*;

    fn all_walks(n: usize) -> impl Iterator<Item = Walk> {
        (0..4usize.pow(n as u32)).map(move |code| {
            let steps: Vec<Step> = (0..n).map(|k| Step::ALL[(code >> (2 * k)) & 3]).collect();
            Walk::from_steps(&steps)
        })
    }

    #[test]
    fn step_spin_table() {
        assert_eq!(East.spins(), (1, 1));
        assert_eq!(North.spins(), (1, -1));
        assert_eq!(West.spins(), (-1, -1));
        assert_eq!(South.spins(), (-1, 1));
        // μ = σ (e₁+e₂)/2 + σ̃ (e₁-e₂)/2
        for step in Step::ALL {
            let (s, st) = step.spins();
            let (s, st) = (s as i64, st as i64);
            assert_eq!(step.delta(), ((s + st) / 2, (s - st) / 2));
        }
    }

    #[test]
    fn single_and_straight_inverse() {
        let w = spins_to_walk(&SpinChain::all_up(1), &SpinChain::all_up(1)).unwrap();
        assert_eq!(w.positions(), &[(0, 0), (1, 0)]);
        let w = spins_to_walk(&SpinChain::all_up(2), &SpinChain::all_up(2)).unwrap();
        assert_eq!(w.positions(), &[(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn round_trip_all_walks_of_length_three() {
        let mut seen = std::collections::HashSet::new();
        for w in all_walks(3) {
            let (s, st) = walk_to_spins(&w);
            assert!(seen.insert((s.clone(), st.clone())));
            assert_eq!(spins_to_walk(&s, &st).unwrap(), w);
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn bijection_up_to_eight_steps() {
        for n in 1..=8 {
            let mut seen = std::collections::HashSet::new();
            for w in all_walks(n) {
                let (s, st) = walk_to_spins(&w);
                assert_eq!(spins_to_walk(&s, &st).unwrap(), w);
                assert!(seen.insert((s.to_mask(), st.to_mask())));
            }
            assert_eq!(seen.len(), 4usize.pow(n as u32));
        }
    }

    #[test]
    fn rejects_invalid_walks() {
        assert!(Walk::from_positions(vec![(0, 0), (1, 1)]).is_err());
        assert!(Walk::from_positions(vec![(0, 0), (2, 0)]).is_err());
        assert!(Walk::from_positions(vec![(0, 0), (0, 0)]).is_err());
        assert!(Walk::from_positions(vec![(1, 0), (2, 0)]).is_err());
        assert!(Walk::from_positions(vec![]).is_err());
        assert!(Walk::from_positions(vec![(0, 0), (0, -1), (-1, -1)]).is_ok());
    }

    #[test]
    fn spin_length_mismatch() {
        let err = spins_to_walk(&SpinChain::all_up(2), &SpinChain::all_up(3)).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
        assert!(SpinChain::new(vec![1, 0, -1]).is_err());
    }

    #[test]
    fn end_to_end_examples() {
        assert_eq!(end_to_end_sq(&Walk::from_steps(&[East, East])), 4);
        assert_eq!(end_to_end_sq(&Walk::from_steps(&[East, North])), 2);
        assert_eq!(end_to_end_sq(&Walk::from_steps(&[East, West])), 0);
    }

    #[test]
    fn walk_energy_examples() {
        assert!((walk_energy(&Walk::from_steps(&[East, East]), 4.0) - 2.25).abs() < 1e-15);
        assert!((walk_energy(&Walk::from_steps(&[East, North]), 4.0) - 2.125).abs() < 1e-15);
        for alpha in [2.5, 3.5, 4.0] {
            assert_eq!(walk_energy(&Walk::from_steps(&[South]), alpha), 1.0);
        }
    }

    #[test]
    fn spin_energy_examples() {
        let c = CouplingField::new(ModelParams::new(2, 4.0, 1.0).unwrap());
        assert!((spin_energy(&SpinChain::all_up(2), &c).unwrap() - 0.0625).abs() < 1e-15);
        let s = SpinChain::new(vec![1, -1]).unwrap();
        assert!((spin_energy(&s, &c).unwrap() + 0.0625).abs() < 1e-15);
        let c1 = CouplingField::new(ModelParams::new(1, 3.5, 1.0).unwrap());
        assert_eq!(spin_energy(&SpinChain::all_up(1), &c1).unwrap(), 0.0);
        assert!(spin_energy(&SpinChain::all_up(3), &c).is_err());
    }

    #[test]
    fn end_to_end_from_magnetizations() {
        for w in all_walks(5) {
            let (s, st) = walk_to_spins(&w);
            let (m, mt) = (s.magnetization(), st.magnetization());
            assert_eq!(2 * end_to_end_sq(&w) as i64, m * m + mt * mt);
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 3.5, 1.0).is_err());
        assert!(ModelParams::new(4, 2.0, 1.0).is_err());
        assert!(ModelParams::new(4, 3.5, -0.1).is_err());
        assert!(ModelParams::new(4, 3.5, f64::NAN).is_err());
        let p = ModelParams::new(4, 2.5, 0.0).unwrap();
        assert!(!p.in_standard_range());
        assert!(ModelParams::new(4, 4.0, 0.0).unwrap().in_standard_range());
    }
}
