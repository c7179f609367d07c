use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use crate::numeric::median;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean; zero for fewer than two values.
pub fn mean_se(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sd(v: &[f64]) -> f64 {
    mean_se(v) * (v.len() as f64).sqrt()
}

/// `sqrt(p (1 - p) / reps)`.
pub fn proportion_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Least-squares fit of `y = intercept + slope * x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Percentile bootstrap interval over reps, resampled within each `n`.
    pub ci: (f64, f64),
    pub ci_level: f64,
    pub bootstrap: usize,
}

/// Slope of `log median(loss)` against `log n`.
///
/// `losses[k]` holds the per-rep losses at `ns[k]`.
pub fn fit_log_slope(ns: &[usize], losses: &[Vec<f64>], bootstrap: usize, seed: u64) -> SlopeFit {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = losses.iter().map(|l| median(l).ln()).collect();
    let (slope, intercept) = ols(&x, &y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut draws: Vec<f64> = (0..bootstrap)
        .map(|_| {
            let yb: Vec<f64> = losses
                .iter()
                .map(|l| {
                    let res: Vec<f64> = (0..l.len()).map(|_| l[rng.random_range(0..l.len())]).collect();
                    median(&res).ln()
                })
                .collect();
            ols(&x, &yb).0
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let ci = if draws.is_empty() {
        (slope, slope)
    } else {
        (quantile_sorted(&draws, 0.025), quantile_sorted(&draws, 0.975))
    };
    SlopeFit {
        slope,
        intercept,
        ci,
        ci_level: 0.95,
        bootstrap,
    }
}

/// Bootstrap standard error of the median.
pub fn median_se(v: &[f64], bootstrap: usize, rng: &mut ChaCha8Rng) -> f64 {
    if v.len() < 2 || bootstrap < 2 {
        return 0.0;
    }
    let meds: Vec<f64> = (0..bootstrap)
        .map(|_| {
            let res: Vec<f64> = (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect();
            median(&res)
        })
        .collect();
    sd(&meds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ols_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i) = ols(&x, &y);
        assert_relative_eq!(s, -0.5, epsilon = 1e-14);
        assert_relative_eq!(i, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn power_law_losses_give_their_exponent() {
        let ns = [100, 200, 400, 800, 1600];
        let losses: Vec<Vec<f64>> = ns
            .iter()
            .map(|&n| (1..=9).map(|k| k as f64 * (n as f64).powf(-0.4)).collect())
            .collect();
        let fit = fit_log_slope(&ns, &losses, 50, 3);
        assert_relative_eq!(fit.slope, -0.4, epsilon = 1e-12);
        assert!(fit.ci.0 <= fit.slope + 1e-9 && fit.slope - 1e-9 <= fit.ci.1 + 0.2);
        assert_eq!(fit, fit_log_slope(&ns, &losses, 50, 3));
    }

    #[test]
    fn dispersion_helpers() {
        assert_eq!(mean_se(&[1.0]), 0.0);
        assert_relative_eq!(mean_se(&[1.0, 3.0]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(proportion_se(0.5, 100), 0.05, epsilon = 1e-15);
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
    }
}
