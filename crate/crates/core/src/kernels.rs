//! Sorted sample store and exact triangular-kernel queries.
//!
//! All queries are `O(log n)`: window counts come from binary search and
//! window sums from compensated prefix sums.

use serde::Serialize;

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn add_f64(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    fn sub(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, -o.hi);
        let (hi, lo) = two_sum(s, e + self.lo - o.lo);
        Dd { hi, lo }
    }

    /// Exact product `k * x` as a double-double.
    fn product(k: f64, x: f64) -> Dd {
        let hi = k * x;
        let lo = k.mul_add(x, -hi);
        Dd { hi, lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// An immutable sorted sample with prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    prefix: Vec<Dd>,
}

/// Triangular-kernel statistics at a location `z` and bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStats {
    /// `#{X_i in [z - h, z + h]}`.
    pub closed: usize,
    /// `#{X_i in (z, z + h)}`.
    pub right: usize,
    /// `#{X_i in (z - h, z]}`.
    pub left: usize,
    /// `sum_i K((z - X_i) / h)`.
    pub kernel_sum: f64,
}

impl Sample {
    /// Sorts a copy of `values`; fails on empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        let mut values = values;
        values.sort_by(f64::total_cmp);
        // -0.0 and 0.0 compare equal; normalise so results are sign-agnostic.
        for v in &mut values {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = Dd::default();
        prefix.push(acc);
        for &v in &values {
            acc = acc.add_f64(v);
            prefix.push(acc);
        }
        Ok(Self { values, prefix })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.n() - 1]
    }

    /// `prefix[k] = sum_{i < k} values[i]`.
    pub fn prefix_sum(&self, k: usize) -> f64 {
        self.prefix[k].value()
    }

    /// `#{X_i < x}`.
    pub fn count_lt(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    /// `#{X_i <= x}`.
    pub fn count_le(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    /// Empirical probability of the closed interval `[a, b]`; zero if `a > b`.
    pub fn interval_prob(&self, a: f64, b: f64) -> f64 {
        self.interval_count(a, b) as f64 / self.n() as f64
    }

    pub fn interval_count(&self, a: f64, b: f64) -> usize {
        if a > b {
            return 0;
        }
        self.count_le(b) - self.count_lt(a)
    }

    fn window_sum(&self, i: usize, j: usize) -> Dd {
        self.prefix[j].sub(self.prefix[i])
    }

    /// Counts and kernel sum for the window around `z`.
    pub fn window_stats(&self, h: f64, z: f64) -> Result<WindowStats> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveBandwidth(h));
        }
        let lo = z - h;
        let hi = z + h;
        let i_open = self.count_le(lo); // first index with X > z - h
        let i_mid = self.count_le(z); // first index with X > z
        let j_open = self.count_lt(hi); // first index with X >= z + h
        let closed = self.count_le(hi) - self.count_lt(lo);
        let left = i_mid - i_open;
        let right = j_open.max(i_mid) - i_mid;
        // sum over left window of (z - X_i), and over right of (X_i - z).
        let dl = Dd::product(left as f64, z).sub(self.window_sum(i_open, i_mid));
        let dr = if right > 0 {
            self.window_sum(i_mid, j_open).sub(Dd::product(right as f64, z))
        } else {
            Dd::default()
        };
        let dist = dl.value() + dr.value();
        let kernel_sum = ((left + right) as f64 - dist / h).max(0.0);
        Ok(WindowStats {
            closed,
            right,
            left,
            kernel_sum,
        })
    }

    /// Triangular-kernel density estimate `(1/(nh)) sum (1 - |x - X_i|/h)_+`.
    pub fn kde_tri(&self, h: f64, x: f64) -> Result<f64> {
        let w = self.window_stats(h, x)?;
        Ok(w.kernel_sum / (self.n() as f64 * h))
    }

    /// Weak derivative `(1/(nh^2)) (#(x, x+h) - #(x-h, x])` of [`Self::kde_tri`].
    pub fn kde_tri_deriv(&self, h: f64, x: f64) -> Result<f64> {
        let w = self.window_stats(h, x)?;
        Ok((w.right as f64 - w.left as f64) / (self.n() as f64 * h * h))
    }

    /// Smallest strictly positive gap between consecutive order statistics.
    pub fn min_positive_gap(&self) -> Option<f64> {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&d| d > 0.0)
            .min_by(f64::total_cmp)
    }
}
