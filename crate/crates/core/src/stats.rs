//! Small statistics toolkit: intervals, autocorrelation, batch means.

use serde::{Deserialize, Serialize};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Point estimate with a standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub ci: Interval,
}

impl Estimate {
    pub fn normal(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr, ci: Interval::new(value - Z95 * stderr, value + Z95 * stderr) }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0, ci: Interval::point(value) }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (window M is the smallest with M >= 5 tau). Returns 1 for series that
/// are constant or too short to say anything.
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c = xs[..n - lag].iter().zip(&xs[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Effective sample size of a set of independent chains.
pub fn effective_size(chains: &[&[f64]]) -> f64 {
    chains.iter().filter(|c| !c.is_empty()).map(|c| c.len() as f64 / integrated_autocorr_time(c)).sum()
}

/// Wilson score interval for a proportion with `successes` out of
/// `n_eff` effective trials (`n_eff` may be fractional).
pub fn wilson(p_hat: f64, n_eff: f64, z: f64) -> Interval {
    if n_eff <= 0.0 {
        return Interval::new(0.0, 1.0);
    }
    let z2 = z * z;
    let denom = 1.0 + z2 / n_eff;
    let center = (p_hat + z2 / (2.0 * n_eff)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n_eff + z2 / (4.0 * n_eff * n_eff)).sqrt() / denom;
    let lo = if p_hat <= 0.0 { 0.0 } else { (center - half).clamp(0.0, p_hat) };
    let hi = if p_hat >= 1.0 { 1.0 } else { (center + half).clamp(p_hat, 1.0) };
    Interval::new(lo, hi)
}

/// Means of `n_batches` contiguous, equally sized batches (a short tail
/// is dropped).
pub fn batch_means(xs: &[f64], n_batches: usize) -> Vec<f64> {
    let size = xs.len() / n_batches.max(1);
    if size == 0 {
        return xs.to_vec();
    }
    xs.chunks_exact(size).take(n_batches).map(mean).collect()
}

/// Covariance of two equally long samples.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = mean(&xs[..n]);
    let my = mean(&ys[..n]);
    xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1) as f64
}

/// Normalized histogram densities on `[lo, hi)` with `bins` bins; values
/// outside the range are clamped into the edge bins.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = (hi - lo) / bins as f64;
    for &x in xs {
        let idx = ((x - lo) / width).floor();
        let idx = if idx.is_nan() { 0 } else { idx.clamp(0.0, (bins - 1) as f64) as usize };
        counts[idx] += 1.0;
    }
    let total = xs.len().max(1) as f64;
    counts.iter().map(|c| c / total).collect()
}
