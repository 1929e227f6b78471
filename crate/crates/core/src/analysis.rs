//! Scaling exponent `γ` of `⟨ω_N²⟩ ~ N^γ`, regime labels and `(α, β, N)` scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingField;
use crate::model::ModelParams;
use crate::sampler::rng::cell_stream_id;
use crate::sampler::stats::jackknife;
use crate::sampler::{RunPlan, SampleStats, Sampler};
use crate::{Error, Result};

/// Relative error assigned to points reported with zero error.
const ERROR_FLOOR: f64 = 1e-12;

/// Windowed fits drop small N while `χ²/dof` exceeds this.
pub const WINDOW_CHI2: f64 = 3.0;

pub const DIFFUSIVE_BELOW: f64 = 1.2;
pub const BALLISTIC_ABOVE: f64 = 1.8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub mean: f64,
    pub err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub gamma_err: f64,
    /// Log of the prefactor.
    pub intercept: f64,
    pub chi2_per_dof: f64,
    pub n_points: usize,
}

/// Weighted least squares of `ln mean` on `ln N` with `σ = err / mean`.
///
/// The slope error comes from the fit covariance and is scaled by
/// `sqrt(χ²/dof)` when that exceeds one.
pub fn fit_gamma(points: &[ScalingPoint]) -> Result<GammaFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() {
        return Err(Error::Fit("sizes must be distinct".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.mean > 0.0 && p.mean.is_finite()) || p.err.is_nan() || p.err < 0.0) {
        return Err(Error::Fit(format!("invalid point at N={}: mean {} err {}", p.n, p.mean, p.err)));
    }
    if ns[0] == 0 {
        return Err(Error::Fit("N must be positive".into()));
    }

    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let data: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let sigma = (p.err / p.mean).max(ERROR_FLOOR);
            ((p.n as f64).ln(), p.mean.ln(), 1.0 / (sigma * sigma))
        })
        .collect();
    for &(x, y, w) in &data {
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let delta = sw * sxx - sx * sx;
    let gamma = (sw * sxy - sx * sy) / delta;
    let intercept = (sxx * sy - sx * sxy) / delta;
    let chi2: f64 = data.iter().map(|&(x, y, w)| w * (y - intercept - gamma * x).powi(2)).sum();
    let dof = (points.len() - 2) as f64;
    let chi2_per_dof = chi2 / dof;
    let gamma_err = (sw / delta).sqrt() * chi2_per_dof.sqrt().max(1.0);
    Ok(GammaFit { gamma, gamma_err, intercept, chi2_per_dof, n_points: points.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedFit {
    pub fit: GammaFit,
    /// Sizes dropped from the small-N end.
    pub dropped: Vec<usize>,
}

/// Fit, then drop the smallest N while `χ²/dof > 3` and more than three points remain.
pub fn fit_gamma_windowed(points: &[ScalingPoint]) -> Result<WindowedFit> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.n);
    let mut start = 0;
    let mut fit = fit_gamma(&sorted)?;
    while fit.chi2_per_dof > WINDOW_CHI2 && sorted.len() - start > 3 {
        start += 1;
        fit = fit_gamma(&sorted[start..])?;
    }
    Ok(WindowedFit { fit, dropped: sorted[..start].iter().map(|p| p.n).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Diffusive,
    Undetermined,
    Ballistic,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Diffusive => "diffusive",
            Regime::Undetermined => "undetermined",
            Regime::Ballistic => "ballistic",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusive" => Ok(Regime::Diffusive),
            "undetermined" => Ok(Regime::Undetermined),
            "ballistic" => Ok(Regime::Ballistic),
            _ => Err(Error::Parse(format!("unknown regime {s:?}"))),
        }
    }
}

/// Diffusive if `γ + 2σ < 1.2`, ballistic if `γ - 2σ > 1.8`, else undetermined.
pub fn classify(fit: &GammaFit) -> Regime {
    if fit.gamma + 2.0 * fit.gamma_err < DIFFUSIVE_BELOW {
        Regime::Diffusive
    } else if fit.gamma - 2.0 * fit.gamma_err > BALLISTIC_ABOVE {
        Regime::Ballistic
    } else {
        Regime::Undetermined
    }
}

/// Delete-one-block jackknife error of `γ`: block `k` is removed from every
/// size at once and the fit is repeated on the reduced means.
pub fn gamma_jackknife(stats: &[&SampleStats]) -> Result<f64> {
    let k = stats.iter().map(|s| s.block_means.len()).min().unwrap_or(0);
    if k < 2 || stats.len() < 3 {
        return Err(Error::Fit("jackknife needs 3 sizes with at least 2 blocks".into()));
    }
    let blocks: Vec<usize> = (0..k).collect();
    let estimator = |kept: &[usize]| {
        let points: Vec<ScalingPoint> = stats
            .iter()
            .map(|s| {
                let mean = kept.iter().map(|&b| s.block_means[b]).sum::<f64>() / kept.len() as f64;
                ScalingPoint { n: s.n, mean, err: s.err_m_sq }
            })
            .collect();
        fit_gamma(&points).map(|f| f.gamma).unwrap_or(f64::NAN)
    };
    let (_, err) = jackknife(&blocks, estimator);
    if err.is_finite() {
        Ok(err)
    } else {
        Err(Error::Fit("jackknife fit failed on a reduced sample".into()))
    }
}

/// One sampler run of the scan grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub stats: Option<SampleStats>,
    pub error: Option<String>,
}

/// Fit and label of one `(α, β)` column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub alpha: f64,
    pub beta: f64,
    pub fit: Option<GammaFit>,
    pub regime: Regime,
    pub dropped: Vec<usize>,
    pub gamma_jackknife_err: Option<f64>,
    pub error: Option<String>,
}

/// `[largest diffusive β, smallest ballistic β]` at one `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub alpha: f64,
    pub diffusive_beta: Option<f64>,
    pub ballistic_beta: Option<f64>,
}

impl Bracket {
    pub fn is_bounded(&self) -> bool {
        matches!((self.diffusive_beta, self.ballistic_beta), (Some(lo), Some(hi)) if lo < hi)
    }
}

/// `γ` decreased between consecutive β by more than two combined standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityFlag {
    pub alpha: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub plan: RunPlan,
    pub cells: Vec<ScanCell>,
    pub records: Vec<ScanRecord>,
    pub brackets: Vec<Bracket>,
    pub monotonicity_flags: Vec<MonotonicityFlag>,
}

impl ScanResult {
    pub fn record(&self, alpha: f64, beta: f64) -> Option<&ScanRecord> {
        self.records.iter().find(|r| r.alpha == alpha && r.beta == beta)
    }
}

/// Check the size grid: at least three distinct sizes spanning a factor of 8.
pub fn validate_sizes(ns: &[usize]) -> Result<()> {
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ns.len() || sorted.len() < 3 {
        return Err(Error::InvalidPlan("need at least 3 distinct sizes".into()));
    }
    if sorted[0] == 0 || sorted[sorted.len() - 1] < 8 * sorted[0] {
        return Err(Error::InvalidPlan(format!(
            "sizes must span a factor of 8, got {}..{}",
            sorted[0],
            sorted[sorted.len() - 1]
        )));
    }
    Ok(())
}

/// Run the sampler at every `(α, β, N)` and fit `γ` per `(α, β)`.
///
/// Each cell draws from its own stream derived from the grid indices, so the
/// result does not depend on `jobs` (0 uses all cores). Failed cells are
/// recorded and the scan continues.
pub fn scan(alphas: &[f64], betas: &[f64], ns: &[usize], plan: &RunPlan, jobs: usize) -> Result<ScanResult> {
    validate_sizes(ns)?;
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidPlan("empty alpha or beta grid".into()));
    }
    for &a in alphas {
        ModelParams::new(ns[0], a, 0.0)?;
    }
    for &b in betas {
        ModelParams::new(ns[0], alphas[0], b)?;
    }
    plan.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidPlan(e.to_string()))?;
    pool.install(|| scan_inner(alphas, betas, ns, plan))
}

fn scan_inner(alphas: &[f64], betas: &[f64], ns: &[usize], plan: &RunPlan) -> Result<ScanResult> {
    let fields: Vec<Vec<CouplingField>> = alphas
        .par_iter()
        .map(|&a| ns.iter().map(|&n| CouplingField::with_default_storage(ModelParams { n, alpha: a, beta: 0.0 })).collect())
        .collect();
    let samplers: Vec<Vec<std::result::Result<Sampler<'_>, String>>> = fields
        .par_iter()
        .map(|row| row.iter().map(|c| Sampler::new(c).map_err(|e| e.to_string())).collect())
        .collect();

    let mut jobs = Vec::new();
    for ai in 0..alphas.len() {
        for bi in 0..betas.len() {
            for ni in 0..ns.len() {
                jobs.push((ai, bi, ni));
            }
        }
    }
    let cells: Vec<ScanCell> = jobs
        .par_iter()
        .map(|&(ai, bi, ni)| {
            let stream = cell_stream_id(&[ai as u64, bi as u64, ni as u64]);
            let (alpha, beta, n) = (alphas[ai], betas[bi], ns[ni]);
            let cell_plan = RunPlan { stream, ..plan.clone() };
            let outcome = match &samplers[ai][ni] {
                Ok(s) => s.run(beta, &cell_plan).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            if let Err(e) = &outcome {
                log::warn!("scan cell alpha={alpha} beta={beta} N={n} failed: {e}");
            }
            let (stats, error) = match outcome {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e)),
            };
            ScanCell { alpha, beta, n, seed: plan.seed, stream, stats, error }
        })
        .collect();

    let mut records = Vec::with_capacity(alphas.len() * betas.len());
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            let start = (ai * betas.len() + bi) * ns.len();
            let column: Vec<&SampleStats> = cells[start..start + ns.len()].iter().filter_map(|c| c.stats.as_ref()).collect();
            records.push(fit_column(alpha, beta, &column));
        }
    }

    let mut brackets = Vec::new();
    let mut monotonicity_flags = Vec::new();
    for &alpha in alphas {
        let mut column: Vec<&ScanRecord> = records.iter().filter(|r| r.alpha == alpha).collect();
        column.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        let diffusive_beta = column.iter().filter(|r| r.regime == Regime::Diffusive).map(|r| r.beta).fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.max(b))));
        let ballistic_beta = column.iter().filter(|r| r.regime == Regime::Ballistic).map(|r| r.beta).fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.min(b))));
        brackets.push(Bracket { alpha, diffusive_beta, ballistic_beta });

        let fitted: Vec<(f64, GammaFit)> = column.iter().filter_map(|r| r.fit.map(|f| (r.beta, f))).collect();
        for w in fitted.windows(2) {
            let ((b0, f0), (b1, f1)) = (w[0], w[1]);
            if f1.gamma < f0.gamma - 2.0 * f0.gamma_err.hypot(f1.gamma_err) {
                log::warn!("alpha={alpha}: gamma decreases from {} at beta={b0} to {} at beta={b1}", f0.gamma, f1.gamma);
                monotonicity_flags.push(MonotonicityFlag { alpha, beta_lo: b0, beta_hi: b1, gamma_lo: f0.gamma, gamma_hi: f1.gamma });
            }
        }
    }

    Ok(ScanResult {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        ns: ns.to_vec(),
        plan: plan.clone(),
        cells,
        records,
        brackets,
        monotonicity_flags,
    })
}

fn fit_column(alpha: f64, beta: f64, column: &[&SampleStats]) -> ScanRecord {
    let points: Vec<ScalingPoint> = column.iter().map(|s| ScalingPoint { n: s.n, mean: s.mean_m_sq, err: s.err_m_sq }).collect();
    match fit_gamma_windowed(&points) {
        Ok(w) => {
            let kept: Vec<&SampleStats> = column.iter().copied().filter(|s| !w.dropped.contains(&s.n)).collect();
            ScanRecord {
                alpha,
                beta,
                fit: Some(w.fit),
                regime: classify(&w.fit),
                dropped: w.dropped,
                gamma_jackknife_err: gamma_jackknife(&kept).ok(),
                error: None,
            }
        }
        Err(e) => ScanRecord {
            alpha,
            beta,
            fit: None,
            regime: Regime::Undetermined,
            dropped: Vec::new(),
            gamma_jackknife_err: None,
            error: Some(e.to_string()),
        },
    }
}
