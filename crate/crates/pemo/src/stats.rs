//! Correlation and summary statistics for threshold tables.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Percentile with linear interpolation between order statistics.
pub fn percentile_linear(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("percentile of empty set".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} out of [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in percentile input"));
    let h = (v.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile_linear(values, 50.0)
}

/// Interquartile range as `(p25, p75)`.
pub fn iqr(values: &[f64]) -> Result<(f64, f64)> {
    Ok((percentile_linear(values, 25.0)?, percentile_linear(values, 75.0)?))
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("pearson needs two equal-length series (n >= 2)".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("pearson undefined for constant input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks with ties assigned their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("no NaN in rank input"));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelationReport {
    pub r: f64,
    /// Two-sided permutation p-value.
    pub p: f64,
}

fn permutation_p(x: &[f64], y: &[f64], corr: fn(&[f64], &[f64]) -> Result<f64>, n_perm: usize, seed: u64) -> Result<f64> {
    let observed = corr(x, y)?.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = y.to_vec();
    let mut at_least = 0usize;
    for _ in 0..n_perm {
        shuffled.shuffle(&mut rng);
        if let Ok(r) = corr(x, &shuffled) {
            if r.abs() >= observed - 1e-15 {
                at_least += 1;
            }
        }
    }
    Ok((1 + at_least) as f64 / (1 + n_perm) as f64)
}

/// Pearson r with a seeded two-sided permutation test.
pub fn pearson_with_p(x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<CorrelationReport> {
    Ok(CorrelationReport { r: pearson(x, y)?, p: permutation_p(x, y, pearson, n_perm, seed)? })
}

/// Spearman r with a seeded two-sided permutation test.
pub fn spearman_with_p(x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<CorrelationReport> {
    Ok(CorrelationReport { r: spearman(x, y)?, p: permutation_p(x, y, spearman, n_perm, seed)? })
}
