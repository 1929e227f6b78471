//! Error analysis of correlated Monte Carlo series and goodness-of-fit tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Binning levels need at least this many bins to enter the error estimate.
pub const MIN_BINS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningAnalysis {
    pub mean: f64,
    /// Standard error assuming independent samples.
    pub naive_err: f64,
    /// Largest binned standard error over levels with at least `MIN_BINS` bins.
    pub err: f64,
    /// `½ (err / naive_err)²`, in units of the sampling interval, at least ½.
    pub tau_int: f64,
    /// Whether the last two usable levels agree within their statistical accuracy.
    pub plateau: bool,
    /// `(bin size, standard error)` per level.
    pub levels: Vec<(usize, f64)>,
}

fn mean_and_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Blocking analysis: repeatedly average neighbouring pairs and track the
/// standard error of the bin means.
pub fn binning_analysis(series: &[f64]) -> BinningAnalysis {
    assert!(!series.is_empty(), "binning needs at least one sample");
    let (mean, naive_err) = mean_and_err(series);
    let mut levels = vec![(1, naive_err)];
    let mut bins = series.to_vec();
    let mut size = 1;
    while bins.len() / 2 >= MIN_BINS {
        bins = bins.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        size *= 2;
        levels.push((size, mean_and_err(&bins).1));
    }
    let err = levels.iter().map(|l| l.1).fold(naive_err, f64::max);
    let tau_int = if naive_err > 0.0 { (0.5 * (err / naive_err).powi(2)).max(0.5) } else { 0.5 };
    let plateau = match levels.as_slice() {
        [.., (_, prev), (size, last)] => {
            let n_bins = series.len() / size;
            let accuracy = 1.0 / (2.0 * (n_bins as f64 - 1.0)).sqrt();
            *last <= *prev * (1.0 + 2.0 * accuracy) || *last == 0.0
        }
        _ => false,
    };
    BinningAnalysis { mean, naive_err, err, tau_int, plateau, levels }
}

/// Means of `n_blocks` contiguous blocks (fewer if the series is short).
pub fn block_means(series: &[f64], n_blocks: usize) -> Vec<f64> {
    let n_blocks = n_blocks.min(series.len()).max(1);
    let size = series.len() / n_blocks;
    series.chunks_exact(size).take(n_blocks).map(|b| b.iter().sum::<f64>() / size as f64).collect()
}

/// Delete-one jackknife of `estimator` over blocks: returns (estimate on all
/// blocks, jackknife standard error).
pub fn jackknife<T: Clone>(blocks: &[T], estimator: impl Fn(&[T]) -> f64) -> (f64, f64) {
    let full = estimator(blocks);
    let k = blocks.len();
    if k < 2 {
        return (full, 0.0);
    }
    let mut rest = Vec::with_capacity(k - 1);
    let leave_out: Vec<f64> = (0..k)
        .map(|drop| {
            rest.clear();
            rest.extend(blocks.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, b)| b.clone()));
            estimator(&rest)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / k as f64;
    let var = leave_out.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (k as f64 - 1.0) / k as f64;
    (full, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: u64,
    /// Cells merged into one bin because their expected count was small.
    pub pooled_cells: usize,
}

/// Pearson goodness-of-fit of observed counts against probabilities. Cells
/// with expected count below `min_expected` are pooled into a single bin.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareResult> {
    if counts.len() != probs.len() {
        return Err(Error::LengthMismatch { expected: probs.len(), got: counts.len() });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParams("chi-square test with no samples".into()));
    }
    let nf = total as f64;
    let (mut statistic, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp, mut pooled_cells) = (0.0, 0.0, 0usize);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * nf;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
            pooled_cells += 1;
        } else {
            statistic += (o as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_cells > 0 && pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    } else if pooled_obs > 0.0 {
        // mass observed where none is expected
        return Ok(ChiSquareResult { statistic: f64::INFINITY, dof: bins.max(1), p_value: 0.0, samples: total, pooled_cells });
    }
    if bins < 2 {
        return Err(Error::InvalidParams("chi-square test needs at least two bins".into()));
    }
    let dof = bins - 1;
    let p_value = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParams(e.to_string()))?.sf(statistic);
    Ok(ChiSquareResult { statistic, dof, p_value, samples: total, pooled_cells })
}
