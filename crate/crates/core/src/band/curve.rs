use serde::Serialize;
use sha2::{Digest, Sha256};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::kernels::Sample;

/// Grid provenance carried by a band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    #[serde(rename = "J")]
    pub levels: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub n_bandwidths: usize,
    pub n_locations: usize,
}

/// The multiscale band and estimate on an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCurve {
    pub x: Vec<f64>,
    pub lower: Vec<ExtReal>,
    pub upper: Vec<ExtReal>,
    pub estimate: Vec<f64>,
    /// Points where `lower > upper`.
    pub crossed: Vec<bool>,
    pub n: usize,
    pub delta: f64,
    pub grid: GridSummary,
    pub fingerprint: String,
    pub seed: Option<u64>,
}

/// One row of a serialized band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandPoint {
    pub x: f64,
    pub lower: ExtReal,
    pub upper: ExtReal,
    pub estimate: f64,
}

/// `median(lo, hi, 0)`: the element of `[lo, hi]` of smallest absolute value
/// when the interval is nonempty, and a monotone continuous extension when
/// it is crossed.
pub fn project_zero(lo: ExtReal, hi: ExtReal) -> f64 {
    let (a, b) = (lo.to_f64(), hi.to_f64());
    let (mn, mx) = if a <= b { (a, b) } else { (b, a) };
    0f64.clamp(mn, mx)
}

/// SHA-256 of the little-endian bit patterns of the sorted sample.
pub fn fingerprint(sample: &Sample) -> String {
    let mut hasher = Sha256::new();
    for v in sample.values() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

impl BandCurve {
    pub(crate) fn from_bounds(
        sample: &Sample,
        delta: f64,
        grid: &GridSpec,
        lower: Vec<ExtReal>,
        upper: Vec<ExtReal>,
    ) -> Self {
        let estimate = lower.iter().zip(&upper).map(|(&l, &u)| project_zero(l, u)).collect();
        let crossed = lower.iter().zip(&upper).map(|(l, u)| l > u).collect();
        Self {
            x: grid.eval_points.clone(),
            lower,
            upper,
            estimate,
            crossed,
            n: sample.n(),
            delta,
            grid: GridSummary {
                levels: grid.levels,
                h_max: grid.h_max(),
                h_min: grid.h_min(),
                n_bandwidths: grid.bandwidths.len(),
                n_locations: grid.locations.len(),
            },
            fingerprint: fingerprint(sample),
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn crossings(&self) -> usize {
        self.crossed.iter().filter(|&&c| c).count()
    }

    pub fn points(&self) -> Vec<BandPoint> {
        (0..self.len())
            .map(|i| BandPoint {
                x: self.x[i],
                lower: self.lower[i],
                upper: self.upper[i],
                estimate: self.estimate[i],
            })
            .collect()
    }

    /// Index of `x` in the evaluation grid, if present.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.x.binary_search_by(|v| v.total_cmp(&x)).ok()
    }

    /// Estimate as a step function: `estimate[i]` on `[x_i, x_{i+1})`,
    /// extended by the edge values beyond the grid.
    pub fn step_estimate(&self, x: f64) -> f64 {
        let i = self.x.partition_point(|&v| v <= x);
        self.estimate[i.saturating_sub(1)]
    }
}

/// Band and estimate at an arbitrary `x` inside the evaluation grid.
///
/// `upper` and the estimate come from the nearest grid point at or to the
/// left, `lower` from the nearest at or to the right.
pub fn band_eval(curve: &BandCurve, x: f64) -> Result<(ExtReal, ExtReal, f64)> {
    let (lo, hi) = (curve.x[0], curve.x[curve.len() - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfGrid { x, lo, hi });
    }
    let left = curve.x.partition_point(|&v| v <= x) - 1;
    let right = curve.x.partition_point(|&v| v < x);
    Ok((curve.lower[right], curve.upper[left], curve.estimate[left]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_of_zero() {
        let f = ExtReal::Finite;
        assert_eq!(project_zero(f(2.0), f(5.0)), 2.0);
        assert_eq!(project_zero(f(-5.0), f(-2.0)), -2.0);
        assert_eq!(project_zero(f(-1.0), f(3.0)), 0.0);
        assert_eq!(project_zero(ExtReal::NegInf, ExtReal::PosInf), 0.0);
        assert_eq!(project_zero(f(0.5), ExtReal::PosInf), 0.5);
        // Crossed intervals: continuous extension.
        assert_eq!(project_zero(f(3.0), f(1.0)), 1.0);
        assert_eq!(project_zero(f(1.0), f(-2.0)), 0.0);
    }

    fn curve() -> BandCurve {
        let f = ExtReal::Finite;
        let s = Sample::from_slice(&[0.0, 1.0, 2.0]).unwrap();
        let g = GridSpec::new(vec![1.0], vec![0.0], vec![0.0, 1.0, 2.0], 0).unwrap();
        BandCurve::from_bounds(
            &s,
            0.1,
            &g,
            vec![f(1.0), f(-1.0), ExtReal::NegInf],
            vec![f(4.0), f(2.0), f(-0.5)],
        )
    }

    #[test]
    fn evaluation_between_grid_points() {
        let c = curve();
        assert_eq!(band_eval(&c, 1.0).unwrap(), (ExtReal::Finite(-1.0), ExtReal::Finite(2.0), 0.0));
        let (lo, hi, est) = band_eval(&c, 0.5).unwrap();
        assert_eq!((lo, hi, est), (ExtReal::Finite(-1.0), ExtReal::Finite(4.0), 1.0));
        assert!(hi >= c.upper[1]);
        assert!(band_eval(&c, 0.25).unwrap().2 >= band_eval(&c, 1.5).unwrap().2);
        assert!(matches!(band_eval(&c, 2.5), Err(Error::OutOfGrid { .. })));
        assert_eq!(c.crossings(), 0);
    }

    #[test]
    fn step_estimate_extends_edge_values() {
        let c = curve();
        assert_eq!(c.step_estimate(-1.0), 1.0);
        assert_eq!(c.step_estimate(0.3), 1.0);
        assert_eq!(c.step_estimate(2.0), -0.5);
        assert_eq!(c.step_estimate(2.1), -0.5);
    }
}
