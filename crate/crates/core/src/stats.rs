//! Random streams and Monte Carlo summaries.
//!
//! Every random draw in the crate comes from [`stream_rng`]: a ChaCha20
//! generator seeded with the master seed and switched to stream `index`.
//! Draw `i` therefore sees the same numbers regardless of how the work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

/// RNG for draw `index` under `master_seed`.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` for draws `0..n` in parallel and returns results in draw order.
pub fn par_draws<T, F>(n: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha20Rng, usize) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(master_seed, i as u64), i))
        .collect()
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.6448536269514722;

/// Sample mean with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

pub fn mean_estimate(values: &[f64], z: f64) -> MeanEstimate {
    let n = values.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let se = (var / n as f64).sqrt();
    MeanEstimate {
        mean,
        std_error: se,
        ci_low: mean - z * se,
        ci_high: mean + z * se,
        n,
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (p + z * z / (2.0 * n_f)) / denom;
    if successes == 0 {
        return (0.0, (z * z / n_f) / denom);
    }
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical median with a distribution-free confidence interval from order
/// statistics (normal approximation to the binomial ranks).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianEstimate {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn median_estimate(values: &[f64], z: f64) -> MedianEstimate {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        return MedianEstimate {
            median: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
        };
    }
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let half = z * (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0) as usize).min(n - 1);
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    MedianEstimate {
        median,
        ci_low: sorted[lo],
        ci_high: sorted[hi],
    }
}
