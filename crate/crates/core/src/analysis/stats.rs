use serde::Serialize;

use crate::error::{Error, Result};

/// Per-bucket occupancy summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancyStats {
    pub buckets: usize,
    pub total: u64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev: f64,
    pub max: u32,
    /// Buckets above `mean + 6 * sqrt(mean)`.
    pub exceedance_count: usize,
}

impl OccupancyStats {
    pub fn from_counts(counts: &[u32]) -> Self {
        let buckets = counts.len();
        let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        if buckets == 0 {
            return OccupancyStats {
                buckets,
                total,
                mean: 0.0,
                stddev: 0.0,
                max: 0,
                exceedance_count: 0,
            };
        }
        let mean = total as f64 / buckets as f64;
        let ss: f64 = counts.iter().map(|&c| (f64::from(c) - mean).powi(2)).sum();
        let stddev = if buckets > 1 {
            (ss / (buckets - 1) as f64).sqrt()
        } else {
            0.0
        };
        let bound = mean + 6.0 * mean.sqrt();
        OccupancyStats {
            buckets,
            total,
            mean,
            stddev,
            max: counts.iter().copied().max().unwrap_or(0),
            exceedance_count: counts.iter().filter(|&&c| f64::from(c) > bound).count(),
        }
    }
}

/// Poisson model of balls thrown uniformly into buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonExpectation {
    pub mu: f64,
    pub sigma: f64,
    pub six_sigma_bound: f64,
}

pub fn poisson_expectation(total_balls: u64, num_buckets: u64) -> Result<PoissonExpectation> {
    if num_buckets == 0 {
        return Err(Error::config("number of buckets must be positive"));
    }
    let mu = total_balls as f64 / num_buckets as f64;
    let sigma = mu.sqrt();
    Ok(PoissonExpectation {
        mu,
        sigma,
        six_sigma_bound: mu + 6.0 * sigma,
    })
}

pub fn histogram(values: impl IntoIterator<Item = usize>, bins: usize) -> Vec<u32> {
    let mut counts = vec![0u32; bins];
    for v in values {
        counts[v] += 1;
    }
    counts
}

pub fn median(samples: &mut [u64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_unstable();
    let n = samples.len();
    Some(if n % 2 == 1 {
        samples[n / 2] as f64
    } else {
        (samples[n / 2 - 1] as f64 + samples[n / 2] as f64) / 2.0
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 {
            1.0
        } else {
            sxy * sxy / (sxx * syy)
        };
        Some(LinearFit {
            slope,
            intercept,
            r_squared,
        })
    }
}

/// Pearson chi-square statistic of observed counts against expected counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

/// Upper quantile of the chi-square distribution at `z` standard normal
/// deviations (Wilson-Hilferty approximation).
pub fn chi_square_upper_critical(dof: usize, z: f64) -> f64 {
    let k = dof as f64;
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + z * h.sqrt()).powi(3)
}

/// Two-sample Kolmogorov-Smirnov statistic for integer-valued samples.
pub fn ks_two_sample(a: &[u32], b: &[u32]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let ha = histogram(a.iter().map(|&v| v as usize), max + 1);
    let hb = histogram(b.iter().map(|&v| v as usize), max + 1);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ca, mut cb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in ha.iter().zip(&hb) {
        ca += f64::from(*x) / na;
        cb += f64::from(*y) / nb;
        d = d.max((ca - cb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}
