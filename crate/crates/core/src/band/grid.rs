use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Sample;
use crate::numeric::linspace;

/// Bandwidths, candidate centres and output points for the multiscale band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Strictly decreasing, all positive.
    pub bandwidths: Vec<f64>,
    /// Strictly increasing.
    pub locations: Vec<f64>,
    /// Strictly increasing.
    pub eval_points: Vec<f64>,
    /// Number of dyadic levels requested when the grid was built.
    pub levels: usize,
}

/// Knobs for [`GridSpec::for_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub levels: Option<usize>,
    pub h_max: Option<f64>,
    /// Explicit bandwidths; overrides `levels` and `h_max` when set.
    pub bandwidths: Option<Vec<f64>>,
    pub grid_points: usize,
    pub extra_points: Vec<f64>,
    pub max_locations: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            levels: None,
            h_max: None,
            bandwidths: None,
            grid_points: 201,
            extra_points: Vec::new(),
            max_locations: 4096,
        }
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Keeps at most `cap` points at evenly spaced indices, always including both ends.
pub fn thin(v: Vec<f64>, cap: usize) -> Vec<f64> {
    if v.len() <= cap || cap < 2 {
        return v;
    }
    let last = v.len() - 1;
    let mut out: Vec<f64> = (0..cap)
        .map(|k| v[((k as u128 * last as u128 + (cap as u128 - 1) / 2) / (cap as u128 - 1)) as usize])
        .collect();
    out.dedup();
    out
}

/// `ceil(log2 n) + 4`.
pub fn default_levels(n: usize) -> usize {
    let mut k = 0;
    while (1usize << k) < n {
        k += 1;
    }
    k + 4
}

impl GridSpec {
    /// Builds a grid from explicit parts, checking the invariants.
    pub fn new(bandwidths: Vec<f64>, locations: Vec<f64>, eval_points: Vec<f64>, levels: usize) -> Result<Self> {
        let g = Self {
            bandwidths,
            locations,
            eval_points,
            levels,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidths.is_empty() {
            return Err(Error::InvalidGrid("no bandwidths".into()));
        }
        if self.bandwidths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid("bandwidths must be positive and finite".into()));
        }
        if self.bandwidths.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidGrid("bandwidths must be strictly decreasing".into()));
        }
        for (name, v) in [("locations", &self.locations), ("eval_points", &self.eval_points)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} must be finite")));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidGrid(format!("{name} must be strictly increasing")));
            }
        }
        if self.eval_points.is_empty() {
            return Err(Error::InvalidGrid("no evaluation points".into()));
        }
        Ok(())
    }

    /// Default dyadic grid for a sample.
    ///
    /// `h_max` defaults to the data range and `h_min` to the larger of
    /// `range / 2^J` and the smallest positive gap. Centres are the output
    /// points shifted by each bandwidth, kept within `h_max` of the data.
    pub fn for_sample(sample: &Sample, opts: &GridOptions) -> Result<Self> {
        let (x_min, x_max) = (sample.min(), sample.max());
        let range = x_max - x_min;
        let levels = opts.levels.unwrap_or_else(|| default_levels(sample.n()));
        let h_max = match opts.h_max {
            Some(h) if h.is_finite() && h > 0.0 => h,
            Some(h) => return Err(Error::NonPositiveBandwidth(h)),
            None if range > 0.0 => range,
            None => 1.0,
        };
        let scale = if range > 0.0 { range } else { h_max };
        let mut h_min = scale / 2f64.powi(levels as i32);
        if let Some(gap) = sample.min_positive_gap() {
            h_min = h_min.max(gap);
        }
        let mut bandwidths = Vec::new();
        if let Some(hs) = &opts.bandwidths {
            if let Some(&h) = hs.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
                return Err(Error::NonPositiveBandwidth(h));
            }
            bandwidths = hs.clone();
            bandwidths.sort_by(|a, b| b.total_cmp(a));
            bandwidths.dedup();
        } else {
            for j in 0..=levels {
                let h = h_max / 2f64.powi(j as i32);
                if h < h_min && !bandwidths.is_empty() {
                    break;
                }
                bandwidths.push(h);
            }
        }
        let h_max = bandwidths.first().copied().unwrap_or(h_max);
        let mut eval = if range > 0.0 {
            linspace(x_min, x_max, opts.grid_points.max(1))
        } else {
            vec![x_min]
        };
        eval.extend(opts.extra_points.iter().copied().filter(|x| x.is_finite()));
        let eval_points = sorted_unique(eval);
        let (zlo, zhi) = (x_min - h_max, x_max + h_max);
        let mut z = Vec::with_capacity(2 * eval_points.len() * bandwidths.len());
        for &h in &bandwidths {
            for &x in &eval_points {
                for c in [x - h, x + h] {
                    if c >= zlo && c <= zhi {
                        z.push(c);
                    }
                }
            }
        }
        let locations = thin(sorted_unique(z), opts.max_locations);
        Self::new(bandwidths, locations, eval_points, levels)
    }

    pub fn h_max(&self) -> f64 {
        self.bandwidths[0]
    }

    pub fn h_min(&self) -> f64 {
        *self.bandwidths.last().unwrap()
    }

    /// Union of two grids; the result refines both.
    pub fn union(&self, other: &GridSpec) -> Result<GridSpec> {
        let mut h: Vec<f64> = self.bandwidths.iter().chain(&other.bandwidths).copied().collect();
        h.sort_by(|a, b| b.total_cmp(a));
        h.dedup();
        let z = sorted_unique(self.locations.iter().chain(&other.locations).copied().collect());
        let x = sorted_unique(self.eval_points.iter().chain(&other.eval_points).copied().collect());
        GridSpec::new(h, z, x, self.levels.max(other.levels))
    }
}
