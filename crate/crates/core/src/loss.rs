//! Density-weighted squared loss `int (psi_hat(x) - psi(x))^2 f(x) dx`,
//! evaluated in quantile form `int_0^1 (psi_hat(F^{-1}(u)) - J'(u))^2 du`.

use serde::Serialize;

use crate::band::BandCurve;
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::numeric::linspace;
use crate::quadrature::{integrate, Integral};
use crate::zoo::DensityModel;

/// An estimated score curve that can be integrated against a model.
pub trait ScoreCurve {
    fn value(&self, x: f64) -> f64;

    /// Points where the curve may jump or kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Constant values left of the first and right of the last breakpoint.
    fn tail_values(&self) -> Option<(f64, f64)> {
        None
    }

    /// Exact step representation, when the curve is piecewise constant.
    fn as_step(&self) -> Option<StepCurve> {
        None
    }
}

/// `values[k]` on `[knots[k-1], knots[k])`, with open-ended first and last pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCurve {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepCurve {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != knots.len() + 1 {
            return Err(Error::DomainError("step curve needs one more value than knots".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("step curve knots must be sorted and values finite".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            knots: vec![],
            values: vec![c],
        }
    }
}

impl ScoreCurve for StepCurve {
    fn value(&self, x: f64) -> f64 {
        self.values[self.knots.partition_point(|&k| k <= x)]
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.knots.clone()
    }
    fn tail_values(&self) -> Option<(f64, f64)> {
        Some((self.values[0], *self.values.last().unwrap()))
    }
    fn as_step(&self) -> Option<StepCurve> {
        Some(self.clone())
    }
}

/// The estimate of a band as a step function, extended by its edge values.
impl ScoreCurve for BandCurve {
    fn value(&self, x: f64) -> f64 {
        self.step_estimate(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.x[1..].to_vec()
    }
    fn tail_values(&self) -> Option<(f64, f64)> {
        Some((self.estimate[0], *self.estimate.last().unwrap()))
    }
    fn as_step(&self) -> Option<StepCurve> {
        Some(StepCurve {
            knots: self.x[1..].to_vec(),
            values: self.estimate.clone(),
        })
    }
}

/// A curve given by a closure.
pub struct FnCurve<F: Fn(f64) -> f64> {
    pub f: F,
    pub breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> ScoreCurve for FnCurve<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOptions {
    pub tol: f64,
    /// Integration range in `u`; `(0, 1)` requests the full loss.
    pub u_range: (f64, f64),
    /// Bulk is `[cut, 1 - cut]`, tail its complement.
    pub cut: f64,
    pub table_points: usize,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            u_range: (1e-4, 1.0 - 1e-4),
            cut: 0.05,
            table_points: 21,
        }
    }
}

impl LossOptions {
    pub fn full_range() -> Self {
        Self {
            u_range: (0.0, 1.0),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRow {
    pub u: f64,
    pub x: f64,
    pub estimate: f64,
    pub truth: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    /// Loss over the whole unit interval when the remainder is known exactly,
    /// otherwise the integral over `u_range`.
    pub total: f64,
    pub range_integral: f64,
    /// Exact contribution of `u` outside `u_range`, when available.
    pub remainder: Option<f64>,
    /// `int J'^2` outside `u_range`, the loss of the zero curve there.
    pub fisher_outside: f64,
    pub u_range: (f64, f64),
    pub cut: f64,
    pub bulk: f64,
    pub tail: f64,
    pub error_estimate: f64,
    pub exact: bool,
    pub table: Vec<LossRow>,
}

/// Integral of `(c - J')^2` over `[a, b]` in `u`, for a constant `c`.
fn constant_piece(model: &DensityModel, c: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let di = model.fisher_lower(b) - model.fisher_lower(a);
    let di = if di.is_nan() { f64::INFINITY } else { di };
    let v = c * c * (b - a) - 2.0 * c * (model.j(b) - model.j(a)) + di;
    v.max(0.0)
}

struct Pieces {
    /// Sorted subinterval boundaries in `u`.
    cuts: Vec<f64>,
}

impl Pieces {
    fn new(mut pts: Vec<f64>) -> Self {
        pts.retain(|u| (0.0..=1.0).contains(u));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self { cuts: pts }
    }
}

/// Squared-error loss of `curve` against the score of `model`.
pub fn l2_loss(curve: &dyn ScoreCurve, model: &DensityModel, opts: &LossOptions) -> Result<LossReport> {
    let (u0, u1) = opts.u_range;
    if !(0.0 <= u0 && u0 < u1 && u1 <= 1.0) {
        return Err(Error::DomainError(format!("invalid u_range ({u0}, {u1})")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::ParameterOutOfRange {
            param: "tol",
            constraint: "tol > 0",
        });
    }
    if !(opts.cut > 0.0 && opts.cut < 0.5) {
        return Err(Error::ParameterOutOfRange {
            param: "cut",
            constraint: "0 < cut < 1/2",
        });
    }
    let cut = opts.cut;
    let step = curve.as_step();
    let curve_knots_u: Vec<f64> = curve.breakpoints().iter().map(|&x| model.cdf(x)).collect();
    let mut pts = vec![0.0, u0, u1, 1.0, cut, 1.0 - cut];
    pts.extend(model.u_breakpoints());
    pts.extend(curve_knots_u.iter().copied());
    let pieces = Pieces::new(pts);

    // Integral over [a, b], where [a, b] lies between consecutive cut points.
    let piece = |a: f64, b: f64, tol: f64| -> Result<Integral> {
        if let Some(s) = &step {
            // Locate the constant by the piece midpoint in u.
            let mid = 0.5 * (a + b);
            let k = curve_knots_u.partition_point(|&v| v <= mid);
            let c = s.values[k];
            return Ok(Integral {
                value: constant_piece(model, c, a, b),
                error: 0.0,
            });
        }
        let uc = a.max(f64::MIN_POSITIVE);
        let ud = if b >= 1.0 { 1.0 - f64::EPSILON / 2.0 } else { b };
        integrate(
            |u| {
                let d = curve.value(model.quantile(u)) - model.j_prime(u);
                d * d
            },
            uc,
            ud,
            tol,
        )
    };

    let cuts = &pieces.cuts;
    let inside_count = cuts.windows(2).filter(|w| w[0] >= u0 && w[1] <= u1).count().max(1);
    let per = opts.tol / inside_count as f64;
    let mut range = Integral::ZERO;
    let mut bulk = Integral::ZERO;
    let mut tail = Integral::ZERO;
    let mut outside = 0.0;
    let mut outside_known = true;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inside = a >= u0 && b <= u1;
        if inside {
            let i = piece(a, b, per)?;
            range = range + i;
            if a >= cut && b <= 1.0 - cut {
                bulk = bulk + i;
            } else {
                tail = tail + i;
            }
        } else {
            // Outside the range: exact only for constant pieces.
            let c = if let Some(s) = &step {
                let mid = 0.5 * (a + b);
                Some(s.values[curve_knots_u.partition_point(|&v| v <= mid)])
            } else {
                curve.tail_values().and_then(|(cl, cr)| {
                    let first = curve_knots_u.first().copied().unwrap_or(1.0);
                    let last = curve_knots_u.last().copied().unwrap_or(0.0);
                    if b <= first {
                        Some(cl)
                    } else if a >= last {
                        Some(cr)
                    } else {
                        None
                    }
                })
            };
            match c {
                Some(c) => {
                    let v = constant_piece(model, c, a, b);
                    outside += v;
                    if a >= cut && b <= 1.0 - cut {
                        bulk.value += v;
                    } else {
                        tail.value += v;
                    }
                }
                None => outside_known = false,
            }
        }
    }
    if range.error > opts.tol {
        return Err(Error::QuadratureNonconvergence {
            error: range.error,
            tol: opts.tol,
        });
    }
    let remainder = outside_known.then_some(outside);
    let total = range.value + remainder.unwrap_or(0.0);
    let fisher_outside = model.fisher_lower(u0) + model.fisher_upper(u1);
    let table = linspace(u0.max(1e-6), u1.min(1.0 - 1e-6), opts.table_points)
        .into_iter()
        .map(|u| {
            let x = model.quantile(u);
            let estimate = curve.value(x);
            let truth = model.j_prime(u);
            LossRow {
                u,
                x,
                estimate,
                truth,
                contribution: (estimate - truth).powi(2),
            }
        })
        .collect();
    Ok(LossReport {
        total,
        range_integral: range.value,
        remainder,
        fisher_outside,
        u_range: (u0, u1),
        cut,
        bulk: bulk.value,
        tail: tail.value,
        error_estimate: range.error,
        exact: step.is_some(),
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseError {
    pub x: f64,
    pub estimate: f64,
    pub truth: ExtReal,
    /// `None` when the truth is infinite.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseTable {
    pub rows: Vec<PointwiseError>,
    pub max_error: f64,
    pub mean_error: f64,
    pub infinite_count: usize,
}

/// `|psi_hat(x) - psi(x)|` on `xgrid`; infinite truths are flagged and
/// left out of the aggregates.
pub fn pointwise_error(curve: &dyn ScoreCurve, model: &DensityModel, xgrid: &[f64]) -> PointwiseTable {
    let rows: Vec<PointwiseError> = xgrid
        .iter()
        .map(|&x| {
            let estimate = curve.value(x);
            let truth = model.score(x);
            PointwiseError {
                x,
                estimate,
                truth,
                error: truth.finite().map(|t| (estimate - t).abs()),
            }
        })
        .collect();
    let finite: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
    let max_error = finite.iter().copied().fold(0.0, f64::max);
    let mean_error = if finite.is_empty() {
        0.0
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    PointwiseTable {
        infinite_count: rows.len() - finite.len(),
        rows,
        max_error,
        mean_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(s: &str) -> DensityModel {
        s.parse().unwrap()
    }

    #[test]
    fn zero_curve_loss_is_the_fisher_information() {
        for (s, want) in [("laplace:L=2", 4.0), ("flattened-laplace:a=1.7", 1.0), ("gaussian", 1.0)] {
            let m = model(s);
            let r = l2_loss(&StepCurve::constant(0.0), &m, &LossOptions::full_range()).unwrap();
            assert_relative_eq!(r.total, want, epsilon = 1e-12);
            let r = l2_loss(&StepCurve::constant(0.0), &m, &LossOptions::default()).unwrap();
            assert_relative_eq!(r.range_integral + r.fisher_outside, want, epsilon = 1e-12);
            assert_relative_eq!(r.bulk + r.tail, r.total, epsilon = 1e-12);
        }
    }

    #[test]
    fn truth_has_zero_loss() {
        let m = model("gaussian");
        let truth = FnCurve {
            f: |x: f64| -x,
            breaks: vec![],
        };
        let r = l2_loss(&truth, &m, &LossOptions::default()).unwrap();
        assert!(r.total.abs() < 1e-12);
        assert!(!r.exact);
        let m = model("laplace:L=1");
        let truth = StepCurve::new(vec![0.0], vec![1.0, -1.0]).unwrap();
        let r = l2_loss(&truth, &m, &LossOptions::full_range()).unwrap();
        assert!(r.total.abs() < 1e-14);
    }

    #[test]
    fn step_and_quadrature_routes_agree() {
        let step = StepCurve::new(vec![-1.0, 0.2, 0.9], vec![1.5, 0.3, -0.4, -2.0]).unwrap();
        for s in ["gaussian", "gumbel", "laplace:L=1", "subbotin:beta=1.5", "beta:a=3,b=3", "flattened-laplace:a=2,h=0.3"] {
            let m = model(s);
            let exact = l2_loss(&step, &m, &LossOptions::default()).unwrap();
            let generic = FnCurve {
                f: |x| step.value(x),
                breaks: step.knots.clone(),
            };
            let quad = l2_loss(&generic, &m, &LossOptions::default()).unwrap();
            assert!((exact.range_integral - quad.range_integral).abs() < 1e-8, "{s}");
        }
    }

    #[test]
    fn loss_scales_quadratically() {
        let m = model("gaussian");
        let step = StepCurve::new(vec![-0.5, 0.7], vec![0.8, 0.1, -1.1]).unwrap();
        let scaled_m = m.clone().with_scale(2.0).unwrap();
        let scaled = StepCurve::new(vec![-0.25, 0.35], vec![1.6, 0.2, -2.2]).unwrap();
        let a = l2_loss(&step, &m, &LossOptions::full_range()).unwrap().total;
        let b = l2_loss(&scaled, &scaled_m, &LossOptions::full_range()).unwrap().total;
        assert_relative_eq!(b, 4.0 * a, max_relative = 1e-13);
    }

    #[test]
    fn pointwise_errors() {
        let m = model("laplace:L=1");
        let t = pointwise_error(&StepCurve::constant(0.0), &m, &[0.5, 1.0, 3.0]);
        assert!(t.rows.iter().all(|r| r.error == Some(1.0)));
        let g = model("gaussian");
        let c = FnCurve {
            f: |x: f64| -x + 0.1,
            breaks: vec![],
        };
        let t = pointwise_error(&c, &g, &[-1.0, 0.0, 2.0]);
        assert!(t.rows.iter().all(|r| (r.error.unwrap() - 0.1).abs() < 1e-15));
        let b = model("beta:a=3,b=3");
        let t = pointwise_error(&StepCurve::constant(0.0), &b, &[0.0, 0.5, 1.2]);
        assert_eq!(t.infinite_count, 2);
        assert_eq!(t.max_error, 0.0);
    }
}
