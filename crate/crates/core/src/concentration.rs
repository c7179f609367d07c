//! Bernoulli KL divergence, the good-event diagnostic and interval-probability
//! confidence bounds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Sample;
use crate::zoo::DensityModel;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} = {v} outside [0, 1]")))
    }
}

fn xlogy_ratio(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

/// Bernoulli divergence `kl(p, q)` with values in `[0, inf]`.
pub fn kl(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    let v = xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q);
    // Rounding can push tiny values below zero.
    Ok(v.max(0.0))
}

/// `kl(p, q)` when `p > q`, zero otherwise.
pub fn kl_plus(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    if p > q {
        kl(p, q)
    } else {
        Ok(0.0)
    }
}

/// `eps_{n,delta} = log(n^2/delta) / n`, the good-event threshold.
pub fn epsilon_threshold(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    (nf * nf / delta).ln() / nf
}

/// `inf_{t in [0,1]} kl(p, (1 - 2/n) p0 + 2t/n)`, attained by clamping `q` to `p`.
pub fn slack_kl(p_emp: f64, p0: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let base = (1.0 - 2.0 / nf) * p0;
    kl(p_emp, p_emp.clamp(base, base + 2.0 / nf))
}

/// The interval attaining the largest statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstInterval {
    /// Order-statistic indices `(i, j)`, 0-based; `i > j` marks a complement.
    pub i: usize,
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
    /// `true` for `R \ (lo, hi)`, `false` for `[lo, hi]`.
    pub complement: bool,
    pub p_emp: f64,
    pub p_model: f64,
    pub stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodEvent {
    pub n: usize,
    pub delta: f64,
    pub max_stat: f64,
    pub threshold: f64,
    pub holds: bool,
    pub worst_interval: Option<WorstInterval>,
}

/// Evaluates the sample-pair event that certifies the good event.
///
/// For every pair of order statistics the statistic is
/// `kl_+(P_n(I), (1 - 2/n) P_0(I) + 2/n)` with `I = [X_i, X_j]` for `i <= j`
/// and `I = R \ (X_j, X_i)` for `i > j`.
pub fn goodevent_stat(sample: &Sample, model: &DensityModel, delta: f64) -> Result<GoodEvent> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterOutOfRange {
            param: "delta",
            constraint: "0 < delta < 1",
        });
    }
    let n = sample.n();
    let threshold = epsilon_threshold(n, delta);
    if n <= 2 {
        return Ok(GoodEvent {
            n,
            delta,
            max_stat: 0.0,
            threshold,
            holds: true,
            worst_interval: None,
        });
    }
    let xs = sample.values();
    let nf = n as f64;
    let cdf: Vec<f64> = xs.iter().map(|&x| model.cdf(x)).collect();
    let le: Vec<usize> = xs.iter().map(|&x| sample.count_le(x)).collect();
    let lt: Vec<usize> = xs.iter().map(|&x| sample.count_lt(x)).collect();
    let shrink = 1.0 - 2.0 / nf;
    let mut max_stat = 0.0;
    let mut worst = None;
    for i in 0..n {
        for j in 0..n {
            let (count, p0) = if i <= j {
                (le[j] - lt[i], (cdf[j] - cdf[i]).max(0.0))
            } else {
                let open = lt[i].saturating_sub(le[j]);
                (n - open, (1.0 - (cdf[i] - cdf[j])).clamp(0.0, 1.0))
            };
            let p = count as f64 / nf;
            let q = shrink * p0 + 2.0 / nf;
            if p <= q {
                continue;
            }
            let stat = kl(p, q.min(1.0))?;
            if stat > max_stat {
                max_stat = stat;
                worst = Some(WorstInterval {
                    i,
                    j,
                    lo: xs[i.min(j)],
                    hi: xs[i.max(j)],
                    complement: i > j,
                    p_emp: p,
                    p_model: p0,
                    stat,
                });
            }
        }
    }
    Ok(GoodEvent {
        n,
        delta,
        max_stat,
        threshold,
        holds: max_stat < threshold,
        worst_interval: worst,
    })
}

/// `2 log(n^2/delta) / (9n)`, the band constant.
pub fn epsilon_band_value(n: usize, delta: f64) -> f64 {
    2.0 * epsilon_threshold(n, delta) / 9.0
}

/// Confidence bounds for a population probability from its empirical value
/// `phat`, clipped to `[0, 1]`.
pub fn interval_ci(phat: f64, n: usize, delta: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterOutOfRange {
            param: "delta",
            constraint: "0 < delta < 1",
        });
    }
    check_unit("phat", phat)?;
    let nf = n as f64;
    let e = epsilon_band_value(n, delta);
    let centre = (1.0 - 2.0 * e) * phat + 3.0 * e;
    let rad = 3.0 * (e * phat * (1.0 - phat) + e * e).sqrt();
    let denom = (1.0 + 4.0 * e) * (1.0 - 2.0 / nf);
    let j = |w: f64| (centre + w * rad) / denom + (w - 1.0) / (nf - 2.0);
    let lo = j(-1.0).clamp(0.0, 1.0);
    let hi = j(1.0).clamp(0.0, 1.0);
    Ok((lo, hi.max(lo)))
}

/// The `q`-interval containing every `q` with `kl(p, q) < 9 eta / 2`.
pub fn kl_quadratic_bracket(p: f64, eta: f64) -> Result<(f64, f64)> {
    check_unit("p", p)?;
    if !(eta > 0.0) {
        return Err(Error::ParameterOutOfRange {
            param: "eta",
            constraint: "eta > 0",
        });
    }
    let c = ((1.0 - 2.0 * eta) * p + 3.0 * eta) / (1.0 + 4.0 * eta);
    let r = 3.0 * (p * (1.0 - p) * eta + eta * eta).sqrt() / (1.0 + 4.0 * eta);
    Ok((c - r, c + r))
}
