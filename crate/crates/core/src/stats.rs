//! Small estimators used by the simulator and the validation battery.

/// Two-sided 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and a
/// reference CDF. `samples` need not be sorted.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_distance_sorted(&sorted, cdf)
}

/// As [`ks_distance`] but for pre-sorted samples. Evaluates `cdf` once per
/// sample; callers with an expensive reference CDF should thin the input.
pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let below = i as f64 / n;
            let above = (i + 1) as f64 / n;
            (f - below).abs().max((above - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance evaluated on `points` evenly spaced order statistics of a
/// sorted sample. Approximates [`ks_distance_sorted`] from below with error at
/// most `1/points`.
pub fn ks_distance_thinned<F: Fn(f64) -> f64>(sorted: &[f64], points: usize, cdf: F) -> f64 {
    let n = sorted.len();
    if n <= points {
        return ks_distance_sorted(sorted, cdf);
    }
    let nf = n as f64;
    (0..points)
        .map(|j| {
            let i = (j * (n - 1)) / (points - 1).max(1);
            let f = cdf(sorted[i]);
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanVar {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

/// Mean and unbiased sample variance, accumulated in index order.
pub fn mean_var(values: impl IntoIterator<Item = f64>) -> MeanVar {
    // Welford
    let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for x in values {
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
    }
    let variance = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    MeanVar {
        mean,
        variance,
        count,
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean_var(x.iter().copied()).mean;
    let my = mean_var(y.iter().copied()).mean;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    sxy / (sxx * syy).sqrt()
}

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
