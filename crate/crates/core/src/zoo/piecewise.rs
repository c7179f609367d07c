//! Symmetric densities whose log is piecewise affine and concave.
//!
//! On the half-line `[0, inf)` the log-density is `phi(t)` with `phi(0) = 0`,
//! knots `k_1 < ... < k_m` and slopes `s_0, ..., s_m` (non-increasing, last
//! strictly negative). The density is `e^{phi(|x|)} / C` with `C = 2 * int_0^inf e^phi`.

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricLogAffine {
    /// Segment start points on the half-line; `starts[0] = 0`.
    starts: Vec<f64>,
    slopes: Vec<f64>,
    /// `phi` at each segment start.
    phi_at: Vec<f64>,
    /// `int_{starts[j]}^inf e^phi`.
    tail_at: Vec<f64>,
    norm: f64,
}

// int_0^len e^{s t} dt
fn segment_mass(slope: f64, len: f64) -> f64 {
    if slope == 0.0 {
        len
    } else {
        (slope * len).exp_m1() / slope
    }
}

impl SymmetricLogAffine {
    /// `knots` strictly increasing and positive; `slopes.len() == knots.len() + 1`.
    pub fn new(knots: &[f64], slopes: &[f64]) -> Self {
        assert_eq!(slopes.len(), knots.len() + 1);
        assert!(*slopes.last().unwrap() < 0.0, "last slope must be negative");
        let mut starts = vec![0.0];
        let mut sl = vec![slopes[0]];
        for (k, s) in knots.iter().zip(&slopes[1..]) {
            // Zero-length first segments are dropped.
            if *k <= *starts.last().unwrap() {
                *sl.last_mut().unwrap() = *s;
            } else {
                starts.push(*k);
                sl.push(*s);
            }
        }
        let m = starts.len();
        let mut phi_at = vec![0.0; m];
        for j in 1..m {
            phi_at[j] = phi_at[j - 1] + sl[j - 1] * (starts[j] - starts[j - 1]);
        }
        let mut tail_at = vec![0.0; m];
        tail_at[m - 1] = phi_at[m - 1].exp() / (-sl[m - 1]);
        for j in (0..m - 1).rev() {
            let len = starts[j + 1] - starts[j];
            tail_at[j] = tail_at[j + 1] + phi_at[j].exp() * segment_mass(sl[j], len);
        }
        let norm = 2.0 * tail_at[0];
        Self {
            starts,
            slopes: sl,
            phi_at,
            tail_at,
            norm,
        }
    }

    /// Normalising constant `C = int e^phi`.
    pub fn normalizer(&self) -> f64 {
        self.norm
    }

    fn segment(&self, t: f64) -> usize {
        // Last j with starts[j] <= t.
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Unnormalised log-density on the half-line.
    pub fn phi(&self, t: f64) -> f64 {
        let t = t.abs();
        let j = self.segment(t);
        self.phi_at[j] + self.slopes[j] * (t - self.starts[j])
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.phi(x) - self.norm.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// `int_t^inf e^phi` for `t >= 0`.
    fn tail(&self, t: f64) -> f64 {
        let j = self.segment(t);
        let m = self.starts.len();
        let s = self.slopes[j];
        if j == m - 1 {
            return self.phi(t).exp() / (-s);
        }
        let end = self.starts[j + 1];
        // int_t^end e^{phi(end) + s (u - end)} du
        let part = self.phi_at[j + 1].exp() * segment_mass(-s, end - t);
        self.tail_at[j + 1] + part
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.tail(-x) / self.norm
        } else {
            1.0 - self.tail(x) / self.norm
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.cdf(-x)
    }

    /// Solves `tail(t) = m` for `t >= 0`, `0 < m <= C/2`.
    fn tail_inverse(&self, m: f64) -> f64 {
        let last = self.starts.len() - 1;
        if m <= self.tail_at[last] {
            let s = self.slopes[last];
            return self.starts[last] + ((m * (-s)).ln() - self.phi_at[last]) / s;
        }
        // Segment j with tail_at[j+1] < m <= tail_at[j].
        let j = self.tail_at.partition_point(|&v| v >= m) - 1;
        let b = self.starts[j + 1];
        let r = m - self.tail_at[j + 1];
        let s = self.slopes[j];
        let w = r * (-self.phi_at[j + 1]).exp();
        let t = if s == 0.0 {
            b - w
        } else {
            b + (-w * s).ln_1p() / s
        };
        t.clamp(self.starts[j], b)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.5 {
            -self.tail_inverse(u * self.norm)
        } else {
            self.tail_inverse((1.0 - u) * self.norm)
        }
    }

    /// `int_{-inf}^{-t} psi^2 f` for `t >= 0`, where `|psi|` is the absolute slope.
    pub fn fisher_tail(&self, t: f64) -> f64 {
        let t = t.abs();
        let m = self.starts.len();
        let j0 = self.segment(t);
        let mut acc = 0.0;
        for j in j0..m {
            let lo = if j == j0 { t } else { self.starts[j] };
            let mass = if j + 1 < m {
                self.tail(lo) - self.tail_at[j + 1]
            } else {
                self.tail(lo)
            };
            acc += self.slopes[j] * self.slopes[j] * mass;
        }
        acc / self.norm
    }

    /// Total `int psi^2 f`.
    pub fn fisher_total(&self) -> f64 {
        2.0 * self.fisher_tail(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_pieces;
    use approx::assert_relative_eq;

    fn flattened(a: f64) -> SymmetricLogAffine {
        SymmetricLogAffine::new(&[a - 1.0 / a], &[0.0, -a])
    }

    #[test]
    fn flattened_laplace_normaliser_is_2a() {
        for a in [1.0, 1.5, 3.0] {
            assert_relative_eq!(flattened(a).normalizer(), 2.0 * a, epsilon = 1e-14);
        }
    }

    #[test]
    fn cdf_matches_quadrature_and_inverts() {
        let d = SymmetricLogAffine::new(&[0.3, 1.2], &[-0.2, -1.0, -2.5]);
        for x in [-3.0, -1.2, -0.7, 0.0, 0.25, 1.0, 4.0] {
            let q = integrate_pieces(|y| d.pdf(y), -60.0, x, &[-1.2, -0.3, 0.0, 0.3], 1e-14)
                .unwrap()
                .value;
            assert_relative_eq!(d.cdf(x), q, epsilon = 1e-12);
        }
        for u in [1e-12, 0.01, 0.2, 0.5, 0.77, 0.999999] {
            assert_relative_eq!(d.cdf(d.quantile(u)), u, epsilon = 1e-13, max_relative = 1e-12);
        }
    }

    #[test]
    fn fisher_tail_matches_quadrature() {
        let d = SymmetricLogAffine::new(&[0.3, 1.2], &[0.0, -1.0, -2.5]);
        let score2 = |y: f64| {
            let t = y.abs();
            let s = if t < 0.3 { 0.0 } else if t < 1.2 { 1.0 } else { 6.25 };
            s * d.pdf(y)
        };
        let q = integrate_pieces(score2, -60.0, -0.5, &[-1.2], 1e-14).unwrap().value;
        assert_relative_eq!(d.fisher_tail(0.5), q, epsilon = 1e-12);
        assert_relative_eq!(flattened(2.0).fisher_total(), 1.0, epsilon = 1e-14);
    }
}
