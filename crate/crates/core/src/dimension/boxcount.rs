//! Box-counting estimates on sampled point clouds, an independent numeric
//! check on the certified dimension bounds.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountFit {
    /// Least-squares slope of `log N(δ)` against `log(1/δ)`.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub points: usize,
    /// Fewer than three scales gave distinct counts.
    pub degenerate: bool,
}

/// `count` scales spaced evenly in log space from `from` down to `to`.
pub fn log_scales(from: f64, to: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && from > 0.0 && to > 0.0);
    let (a, b) = (from.ln(), to.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

pub fn box_count_estimate(points: &[f64], scales: &[f64]) -> Result<BoxCountFit> {
    if points.is_empty() {
        return Err(Error::Precondition("no points".into()));
    }
    if scales.len() < 2 || scales.iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::Precondition("need at least two positive scales".into()));
    }
    let (min, max) = scales.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if max / min < 1e3 * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "scales span {:.2} orders of magnitude, need at least 3",
            (max / min).log10()
        )));
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|&d| points.iter().map(|&x| (x / d).floor() as i64).collect::<HashSet<_>>().len())
        .collect();
    let xs: Vec<f64> = scales.iter().map(|d| -d.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let distinct = counts.iter().collect::<HashSet<_>>().len();
    Ok(BoxCountFit { slope, intercept, residual, scales: scales.to_vec(), counts, points: points.len(), degenerate: distinct < 3 })
}

/// Points of `F_N` drawn from the measure giving digit `d` weight
/// `(d(d-1))^{-s}`, truncated after `depth` digits (floating point).
pub fn sample_cantor_points(n: u64, s: f64, samples: usize, depth: usize, seed: u64) -> Vec<f64> {
    let weights: Vec<f64> = (2..=n).map(|d| ((d * (d - 1)) as f64).powf(-s)).collect();
    let total: f64 = weights.iter().sum();
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let (mut lo, mut scale) = (0.0f64, 1.0f64);
            for _ in 0..depth {
                let u: f64 = rng.random();
                let i = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
                let d = (i + 2) as f64;
                lo += scale / d;
                scale /= d * (d - 1.0);
            }
            lo + scale / 2.0
        })
        .collect()
}

pub fn sample_uniform_points(samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| rng.random::<f64>()).collect()
}
