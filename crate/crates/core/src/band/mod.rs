//! Per-bandwidth confidence bounds for the smoothed score and their
//! multiscale aggregation into a band and estimator for the score.

mod curve;
mod grid;

use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::epsilon_band_value;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::kernels::{Sample, WindowStats};

pub use curve::{band_eval, fingerprint, project_zero, BandCurve, BandPoint, GridSummary};
pub use grid::{default_levels, thin, GridOptions, GridSpec};

fn validate(n: usize, delta: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ParameterOutOfRange {
            param: "delta",
            constraint: "0 < delta < 1",
        });
    }
    Ok(())
}

/// `2 log(n^2/delta) / (9n)`.
pub fn epsilon_band(n: usize, delta: f64) -> Result<f64> {
    validate(n, delta)?;
    Ok(epsilon_band_value(n, delta))
}

/// `(1 + 4 eps)(1 - 2/n)`.
pub fn c_band(n: usize, delta: f64) -> Result<f64> {
    let e = epsilon_band(n, delta)?;
    Ok((1.0 + 4.0 * e) * (1.0 - 2.0 / n as f64))
}

/// Constants shared by every `(z, h)` evaluation for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandConstants {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl BandConstants {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        let epsilon = epsilon_band(n, delta)?;
        Ok(Self {
            n,
            delta,
            epsilon,
            c: c_band(n, delta)?,
        })
    }
}

/// Intermediate quantities at one `(z, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleTerms {
    pub v: f64,
    /// `M^{(-1)}`, `M^{(+1)}`.
    pub m: [f64; 2],
    /// `D^{(-1)}`, `D^{(+1)}`.
    pub d: [f64; 2],
    pub tau: f64,
    pub lo: ExtReal,
    pub hi: ExtReal,
}

/// Evaluates the per-scale bounds from window statistics.
///
/// `h^2 f'` and `h f` are formed from counts and the kernel sum directly.
pub fn scale_terms(k: &BandConstants, h: f64, w: &WindowStats) -> ScaleTerms {
    let nf = k.n as f64;
    let e = k.epsilon;
    let p_hat = w.closed as f64 / nf;
    let h2_fprime = (w.right as f64 - w.left as f64) / nf;
    let h_f = w.kernel_sum / nf;
    let v = 3.0 * (e * p_hat + e * e).sqrt() + (1.0 + 4.0 * e) / nf;
    let m_of = |om: f64| (1.0 - 2.0 * e) * h2_fprime.abs() + 2.0 * om * v;
    let d_of = |om: f64| h * ((1.0 - 2.0 * e) * h_f + om * v + (3.0 - 4.0 / nf) * e - 1.0 / nf);
    let m = [m_of(-1.0), m_of(1.0)];
    let d = [d_of(-1.0), d_of(1.0)];
    let tau = if h2_fprime >= 0.0 { 1.0 } else { -1.0 };
    let mi = |om: f64| if om < 0.0 { m[0] } else { m[1] };
    let di = |om: f64| if om < 0.0 { d[0] } else { d[1] };
    let psi = |om: f64| -> ExtReal {
        if d[0] > 0.0 && m[0] > 0.0 {
            ExtReal::from_f64(tau * mi(om * tau) / di(-om * tau))
        } else if d[0] > 0.0 {
            ExtReal::from_f64(tau * mi(om * tau) / d[0])
        } else {
            ExtReal::infinity(om as i8)
        }
    };
    ScaleTerms {
        v,
        m,
        d,
        tau,
        lo: psi(-1.0),
        hi: psi(1.0),
    }
}

/// Per-scale bounds `(lo, hi)` for the smoothed score at centre `z`.
pub fn band_at_scale(sample: &Sample, delta: f64, h: f64, z: f64) -> Result<(ExtReal, ExtReal)> {
    let k = BandConstants::new(sample.n(), delta)?;
    let w = sample.window_stats(h, z)?;
    let t = scale_terms(&k, h, &w);
    Ok((t.lo, t.hi))
}

/// Running extremes of the per-scale bounds along the centre grid for one bandwidth.
struct ScaleScan {
    h: f64,
    /// `min_{j' <= j} hi(z_j')`.
    prefix_min_hi: Vec<ExtReal>,
    /// `max_{j' >= j} lo(z_j')`.
    suffix_max_lo: Vec<ExtReal>,
}

fn scan(sample: &Sample, k: &BandConstants, h: f64, z: &[f64]) -> Result<ScaleScan> {
    let mut prefix_min_hi = Vec::with_capacity(z.len());
    let mut los = Vec::with_capacity(z.len());
    let mut run = ExtReal::PosInf;
    for &zj in z {
        let t = scale_terms(k, h, &sample.window_stats(h, zj)?);
        run = run.min(t.hi);
        prefix_min_hi.push(run);
        los.push(t.lo);
    }
    let mut suffix_max_lo = vec![ExtReal::NegInf; z.len()];
    let mut run = ExtReal::NegInf;
    for j in (0..z.len()).rev() {
        run = run.max(los[j]);
        suffix_max_lo[j] = run;
    }
    Ok(ScaleScan {
        h,
        prefix_min_hi,
        suffix_max_lo,
    })
}

/// Multiscale band: `upper(x) = min hi(z, h)` over `z <= x - h` and
/// `lower(x) = max lo(z, h)` over `z >= x + h`, with the estimate the
/// projection of zero onto the resulting interval.
pub fn multiscale_band(sample: &Sample, delta: f64, grid: &GridSpec) -> Result<BandCurve> {
    grid.validate()?;
    let k = BandConstants::new(sample.n(), delta)?;
    let z = &grid.locations;
    let scans: Vec<ScaleScan> = grid
        .bandwidths
        .par_iter()
        .map(|&h| scan(sample, &k, h, z))
        .collect::<Result<_>>()?;
    let mut lower = Vec::with_capacity(grid.eval_points.len());
    let mut upper = Vec::with_capacity(grid.eval_points.len());
    for &x in &grid.eval_points {
        let mut up = ExtReal::PosInf;
        let mut lo = ExtReal::NegInf;
        for s in &scans {
            let cut = x - s.h;
            let nle = z.partition_point(|&zj| zj <= cut);
            if nle > 0 {
                up = up.min(s.prefix_min_hi[nle - 1]);
            }
            let cut = x + s.h;
            let nlt = z.partition_point(|&zj| zj < cut);
            if nlt < z.len() {
                lo = lo.max(s.suffix_max_lo[nlt]);
            }
        }
        lower.push(lo);
        upper.push(up);
    }
    Ok(BandCurve::from_bounds(sample, delta, grid, lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epsilon_values() {
        assert_relative_eq!(
            epsilon_band(100, 0.05).unwrap(),
            2.0 * 200_000f64.ln() / 900.0,
            epsilon = 1e-16
        );
        assert!(epsilon_band(200, 0.05).unwrap() < epsilon_band(100, 0.05).unwrap());
        assert!(epsilon_band(100, 0.05).unwrap() < epsilon_band(100, 0.005).unwrap());
        assert!(matches!(epsilon_band(2, 0.05), Err(Error::SampleTooSmall { .. })));
        assert!(epsilon_band(10, 1.0).is_err());
        let e = epsilon_band(10, 0.1).unwrap();
        assert_relative_eq!(c_band(10, 0.1).unwrap(), (1.0 + 4.0 * e) * 0.8, epsilon = 1e-15);
    }

    #[test]
    fn empty_window_gives_the_whole_line() {
        let s = Sample::from_slice(&[0.0, 1.0, 2.0]).unwrap();
        let (lo, hi) = band_at_scale(&s, 0.1, 0.5, 10.0).unwrap();
        assert_eq!((lo, hi), (ExtReal::NegInf, ExtReal::PosInf));
    }

    #[test]
    fn bounds_are_ordered_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..300).map(|_| rng.random::<f64>().powi(3)).collect();
        let s = Sample::from_slice(&xs).unwrap();
        for _ in 0..2000 {
            let h = 10f64.powf(rng.random_range(-3.0..0.0));
            let z = rng.random_range(-0.2..1.2);
            let (lo, hi) = band_at_scale(&s, 0.1, h, z).unwrap();
            assert!(lo <= hi, "{lo} {hi}");
        }
    }
}
