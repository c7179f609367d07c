#![allow(dead_code)]

use scoreband::DensityModel;

/// One instance of every family, including both flattened-Laplace variants.
pub const ZOO: &[&str] = &[
    "gaussian",
    "laplace:L=1",
    "laplace:L=2.5",
    "flattened-laplace:a=1.4142135623730951,h=0",
    "flattened-laplace:a=2,h=0.3",
    "subbotin:beta=1.5",
    "subbotin:beta=3",
    "gumbel",
    "beta:a=3,b=3",
    "beta:a=2.5,b=6",
];

pub fn model(spec: &str) -> DensityModel {
    spec.parse().unwrap_or_else(|e| panic!("{spec}: {e}"))
}

/// Triangular kernel density by direct summation.
pub fn naive_kde(xs: &[f64], h: f64, x: f64) -> f64 {
    let s: f64 = xs.iter().map(|&xi| (1.0 - ((x - xi) / h).abs()).max(0.0)).sum();
    s / (xs.len() as f64 * h)
}

/// Its derivative by direct counting: `+1` for points in `(x, x+h)`,
/// `-1` for points in `(x-h, x]`.
pub fn naive_kde_deriv(xs: &[f64], h: f64, x: f64) -> f64 {
    let mut s = 0.0;
    for &xi in xs {
        if xi > x && xi < x + h {
            s += 1.0;
        } else if xi > x - h && xi <= x {
            s -= 1.0;
        }
    }
    s / (xs.len() as f64 * h * h)
}

/// Bernoulli KL written out independently of the library.
pub fn naive_kl(p: f64, q: f64) -> f64 {
    let t = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    t(p, q) + t(1.0 - p, 1.0 - q)
}

pub fn quantile_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| 0.01 + 0.98 * k as f64 / (points - 1) as f64).collect()
}
