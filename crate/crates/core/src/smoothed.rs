//! Population-level smoothed density `f_h = K_h * f` and its score.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::quadrature::integrate_pieces;
use crate::zoo::DensityModel;

#[derive(Debug, Clone)]
pub struct SmoothedOracle {
    model: DensityModel,
    h: f64,
    tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedValue {
    pub f_h: f64,
    pub f_h_prime: f64,
    pub psi_h: ExtReal,
}

impl SmoothedOracle {
    /// `tol` is a relative accuracy target for the window integrals.
    pub fn new(model: DensityModel, h: f64, tol: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveBandwidth(h));
        }
        if !(tol > 0.0) {
            return Err(Error::ParameterOutOfRange {
                param: "tol",
                constraint: "tol > 0",
            });
        }
        Ok(Self { model, h, tol })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn model(&self) -> &DensityModel {
        &self.model
    }

    fn finish(&self, x: f64, f_h: f64, f_h_prime: f64) -> Result<SmoothedValue> {
        let (lo, hi) = self.model.support();
        let psi_h = if x + self.h <= lo {
            ExtReal::PosInf
        } else if x - self.h >= hi {
            ExtReal::NegInf
        } else if f_h > 0.0 {
            ExtReal::from_f64(f_h_prime / f_h)
        } else {
            return Err(Error::DomainError(format!(
                "smoothed density underflows at x = {x}"
            )));
        };
        Ok(SmoothedValue {
            f_h,
            f_h_prime,
            psi_h,
        })
    }

    /// Integrates `g` against `f` over `[a, b]` intersected with the support.
    fn window(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        let (lo, hi) = self.model.support();
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return Ok(0.0);
        }
        let mass = (self.model.cdf(b) - self.model.cdf(a)).abs();
        let tol = (self.tol * mass).max(1e-300);
        let breaks = self.model.breakpoints();
        let i = integrate_pieces(|y| g(y) * self.model.pdf(y), a, b, &breaks, tol)?;
        Ok(i.value)
    }

    /// `f_h`, `f_h'` and `psi_h = f_h'/f_h` by quadrature over the kernel window.
    pub fn eval(&self, x: f64) -> Result<SmoothedValue> {
        let h = self.h;
        let (lo, hi) = self.model.support();
        if x + h <= lo || x - h >= hi {
            return self.finish(x, 0.0, 0.0);
        }
        let left_w = self.window(|y| 1.0 - (x - y) / h, x - h, x)?;
        let right_w = self.window(|y| 1.0 - (y - x) / h, x, x + h)?;
        let left_m = self.window(|_| 1.0, x - h, x)?;
        let right_m = self.window(|_| 1.0, x, x + h)?;
        let f_h = (left_w + right_w) / h;
        let f_h_prime = (right_m - left_m) / (h * h);
        self.finish(x, f_h, f_h_prime)
    }

    /// Same quantities through the distribution function: `f_h'` from
    /// second differences of `F` and `f_h` from integrals of `F`.
    pub fn eval_via_cdf(&self, x: f64) -> Result<SmoothedValue> {
        let h = self.h;
        let (lo, hi) = self.model.support();
        if x + h <= lo || x - h >= hi {
            return self.finish(x, 0.0, 0.0);
        }
        let m = &self.model;
        // Masses by F differences, using the survival function on the right.
        let mass = |a: f64, b: f64| {
            if a >= 0.0 {
                m.sf(a) - m.sf(b)
            } else {
                m.cdf(b) - m.cdf(a)
            }
        };
        let f_h_prime = (mass(x, x + h) - mass(x - h, x)) / (h * h);
        // f_h(x) = (1/h^2) int_{x-h}^{x+h} (h - |x - y|) f(y) dy
        //        = (1/h^2) [ int_{x-h}^{x} P(t, x) dt + int_x^{x+h} P(x, t) dt ].
        let breaks: Vec<f64> = m.breakpoints();
        let tol = self.tol * mass(x - h, x + h).max(1e-300);
        let a = integrate_pieces(|t| mass(t, x), x - h, x, &breaks, tol)?;
        let b = integrate_pieces(|t| mass(x, t), x, x + h, &breaks, tol)?;
        let f_h = (a.value + b.value) / (h * h);
        self.finish(x, f_h, f_h_prime)
    }
}
