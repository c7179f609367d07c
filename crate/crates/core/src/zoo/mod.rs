//! Analytic log-concave reference densities.
//!
//! Every model exposes its density, log-density, score, distribution and
//! quantile functions, the density quantile function `J(u) = f(F^{-1}(u))`
//! and its derivative `J'(u) = psi(F^{-1}(u))`, together with exact partial
//! Fisher integrals `int_0^u J'^2`.

mod membership;
mod piecewise;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::kernels::Sample;
use crate::numeric::{safeguarded_newton, sgn};
use crate::quadrature::{integrate, integrate_pieces};

pub use membership::{class_membership, ClassSpec, MembershipPoint, MembershipReport};
pub use piecewise::SymmetricLogAffine;

/// Zoo members with their shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    Laplace { l: f64 },
    FlattenedLaplace { a: f64, h: f64 },
    Subbotin { beta: f64 },
    Gumbel,
    Beta { a: f64, b: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplace { .. } => "laplace",
            Family::FlattenedLaplace { .. } => "flattened-laplace",
            Family::Subbotin { .. } => "subbotin",
            Family::Gumbel => "gumbel",
            Family::Beta { .. } => "beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    Plain,
    Piecewise(SymmetricLogAffine),
    Subbotin { ln_norm: f64, fisher_half: f64 },
    Beta { ln_b: f64 },
}

/// An immutable analytic density `c * f(c x)` for a zoo member `f` and scale `c > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    family: Family,
    scale: f64,
    inner: Inner,
}

fn check(ok: bool, param: &'static str, constraint: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { param, constraint })
    }
}

/// Builds a unit-scale model.
pub fn make_model(family: Family) -> Result<DensityModel> {
    DensityModel::new(family)
}

impl DensityModel {
    pub fn new(family: Family) -> Result<Self> {
        let inner = match family {
            Family::Gaussian | Family::Gumbel => Inner::Plain,
            Family::Laplace { l } => {
                check(l.is_finite() && l > 0.0, "L", "L > 0")?;
                Inner::Plain
            }
            Family::FlattenedLaplace { a, h } => {
                check(a.is_finite() && a >= 1.0, "a", "a >= 1")?;
                check(h.is_finite() && h >= 0.0 && h <= 1.0 / a, "hshift", "0 <= hshift <= 1/a")?;
                check(h == 0.0 || a >= SQRT_2, "a", "a >= sqrt(2) when hshift > 0")?;
                let xa = a - 1.0 / a;
                let pl = if h == 0.0 {
                    SymmetricLogAffine::new(&[xa], &[0.0, -a])
                } else {
                    SymmetricLogAffine::new(&[xa - h, xa + h], &[0.0, -a / 2.0, -a])
                };
                Inner::Piecewise(pl)
            }
            Family::Subbotin { beta } => {
                check(beta.is_finite() && beta >= 1.0, "beta", "beta >= 1")?;
                let ln_norm = (beta - 1.0) / beta * beta.ln() - 2f64.ln() - ln_gamma(1.0 / beta);
                let fisher_half = ((2.0 - 2.0 / beta) * beta.ln() + ln_gamma(2.0 - 1.0 / beta)
                    - ln_gamma(1.0 / beta))
                .exp()
                    / 2.0;
                Inner::Subbotin {
                    ln_norm,
                    fisher_half,
                }
            }
            Family::Beta { a, b } => {
                check(a.is_finite() && a > 1.0, "a", "a > 1")?;
                check(b.is_finite() && b > 1.0, "b", "b > 1")?;
                Inner::Beta { ln_b: ln_beta(a, b) }
            }
        };
        Ok(Self {
            family,
            scale: 1.0,
            inner,
        })
    }

    /// The rescaled model `c * f(c x)`.
    pub fn with_scale(mut self, c: f64) -> Result<Self> {
        check(c.is_finite() && c > 0.0, "scale", "scale > 0")?;
        self.scale = c;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Support as an open interval `(lo, hi)`, possibly with infinite ends.
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::Beta { .. } => (0.0, 1.0 / self.scale),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Points where the density or the score fails to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = match self.family {
            Family::Gaussian | Family::Gumbel => vec![],
            Family::Laplace { .. } | Family::Subbotin { .. } => vec![0.0],
            Family::FlattenedLaplace { a, h } => {
                let xa = a - 1.0 / a;
                vec![-xa - h, -xa + h, xa - h, xa + h]
            }
            Family::Beta { .. } => vec![0.0, 1.0],
        };
        for x in &mut v {
            *x /= self.scale;
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Images under `F` of the interior breakpoints.
    pub fn u_breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .map(|x| self.cdf(x))
            .filter(|&u| u > 0.0 && u < 1.0)
            .collect();
        v.dedup();
        v
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let c = self.scale;
        c * self.base_pdf(c * x)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let c = self.scale;
        c.ln() + self.base_log_pdf(c * x)
    }

    /// Score `psi = (log f)'`; `+inf` left of the support and `-inf` right of it.
    pub fn score(&self, x: f64) -> ExtReal {
        let c = self.scale;
        match self.base_score(c * x) {
            ExtReal::Finite(v) => ExtReal::Finite(c * v),
            other => other,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.base_cdf(self.scale * x)
    }

    /// Survival function `1 - F`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        self.base_sf(self.scale * x)
    }

    /// `F^{-1}(u)` for `u` in `(0, 1)`; the support ends at `u = 0, 1`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.support().0;
        }
        if u >= 1.0 {
            return self.support().1;
        }
        self.base_quantile(u) / self.scale
    }

    /// Density quantile function `J(u) = f(F^{-1}(u))`, zero at the ends.
    pub fn j(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        self.scale * self.base_j(u)
    }

    /// `J'(u) = psi(F^{-1}(u))`; may be infinite only at the ends.
    pub fn j_prime(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.score(self.support().0).to_f64();
        }
        if u >= 1.0 {
            return self.score(self.support().1).to_f64();
        }
        self.scale * self.base_j_prime(u)
    }

    /// Exact Fisher information `int psi^2 f` (possibly infinite).
    pub fn fisher_total(&self) -> f64 {
        let c2 = self.scale * self.scale;
        c2 * match (&self.family, &self.inner) {
            (Family::Gaussian, _) | (Family::Gumbel, _) => 1.0,
            (Family::Laplace { l }, _) => l * l,
            (_, Inner::Piecewise(pl)) => pl.fisher_total(),
            (_, Inner::Subbotin { fisher_half, .. }) => 2.0 * fisher_half,
            (Family::Beta { a, b }, _) => {
                if *a <= 2.0 || *b <= 2.0 {
                    f64::INFINITY
                } else {
                    (a + b - 1.0) * (a + b - 2.0) * (1.0 / (a - 2.0) + 1.0 / (b - 2.0))
                }
            }
            _ => unreachable!(),
        }
    }

    /// `int_0^u J'(v)^2 dv`.
    pub fn fisher_lower(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.fisher_total();
        }
        self.scale * self.scale * self.base_fisher_lower(u)
    }

    /// `int_u^1 J'(v)^2 dv`.
    pub fn fisher_upper(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        if u <= 0.0 {
            return self.fisher_total();
        }
        self.scale * self.scale * self.base_fisher_upper(u)
    }

    /// Fisher information by adaptive quadrature of `J'^2` in `u`, with exact
    /// partial integrals covering the two end strips.
    pub fn fisher_information(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::ParameterOutOfRange {
                param: "tol",
                constraint: "tol > 0",
            });
        }
        if self.fisher_total().is_infinite() {
            return Ok(f64::INFINITY);
        }
        let uc = 1e-6;
        let bulk = integrate_pieces(
            |u| {
                let d = self.j_prime(u);
                d * d
            },
            uc,
            1.0 - uc,
            &self.u_breakpoints(),
            0.5 * tol,
        )?;
        if bulk.error > tol {
            return Err(Error::QuadratureNonconvergence {
                error: bulk.error,
                tol,
            });
        }
        Ok(self.fisher_lower(uc) + bulk.value + self.fisher_upper(1.0 - uc))
    }

    /// Draws `n` values by inverse-CDF sampling with a ChaCha8 stream seeded from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: RngCore>(&self, rng: &mut R, n: usize) -> Result<Sample> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let draws: Vec<f64> = (0..n).map(|_| self.quantile(open_uniform(rng))).collect();
        Sample::new(draws)
    }

    // ---- unit-scale evaluators -------------------------------------------

    fn base_pdf(&self, x: f64) -> f64 {
        match (&self.family, &self.inner) {
            (Family::Laplace { l }, _) => 0.5 * l * (-l * x.abs()).exp(),
            (_, Inner::Piecewise(pl)) => pl.pdf(x),
            (Family::Beta { .. }, _) if x <= 0.0 || x >= 1.0 => 0.0,
            _ => self.base_log_pdf(x).exp(),
        }
    }

    fn base_log_pdf(&self, x: f64) -> f64 {
        match (&self.family, &self.inner) {
            (Family::Gaussian, _) => -0.5 * x * x - 0.5 * (2.0 * PI).ln(),
            (Family::Laplace { l }, _) => (0.5 * l).ln() - l * x.abs(),
            (_, Inner::Piecewise(pl)) => pl.log_pdf(x),
            (Family::Subbotin { beta }, Inner::Subbotin { ln_norm, .. }) => {
                ln_norm - x.abs().powf(*beta) / beta
            }
            (Family::Gumbel, _) => -x - (-x).exp(),
            (Family::Beta { a, b }, Inner::Beta { ln_b }) => {
                if x <= 0.0 || x >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b
                }
            }
            _ => unreachable!(),
        }
    }

    fn base_score(&self, x: f64) -> ExtReal {
        let v = match self.family {
            Family::Gaussian => -x,
            Family::Laplace { l } => -l * sgn(x),
            Family::FlattenedLaplace { a, h } => {
                let xa = a - 1.0 / a;
                let t = x.abs();
                let mag = if t >= xa + h {
                    a
                } else if h > 0.0 && t > xa - h {
                    0.5 * a
                } else {
                    0.0
                };
                -sgn(x) * mag
            }
            Family::Subbotin { beta } => -sgn(x) * x.abs().powf(beta - 1.0),
            Family::Gumbel => (-x).exp() - 1.0,
            Family::Beta { a, b } => {
                if x <= 0.0 {
                    return ExtReal::PosInf;
                }
                if x >= 1.0 {
                    return ExtReal::NegInf;
                }
                (a - 1.0) / x - (b - 1.0) / (1.0 - x)
            }
        };
        ExtReal::from_f64(v)
    }

    fn base_cdf(&self, x: f64) -> f64 {
        match (&self.family, &self.inner) {
            (Family::Gaussian, _) => 0.5 * erfc(-x / SQRT_2),
            (Family::Laplace { l }, _) => {
                if x < 0.0 {
                    0.5 * (l * x).exp()
                } else {
                    1.0 - 0.5 * (-l * x).exp()
                }
            }
            (_, Inner::Piecewise(pl)) => pl.cdf(x),
            (Family::Subbotin { beta }, _) => {
                let tail = 0.5 * subbotin_q(*beta, x.abs());
                if x < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            (Family::Gumbel, _) => (-(-x).exp()).exp(),
            (Family::Beta { a, b }, _) => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else if x <= 0.5 {
                    beta_reg(*a, *b, x)
                } else {
                    1.0 - beta_reg(*b, *a, 1.0 - x)
                }
            }
            _ => unreachable!(),
        }
    }

    fn base_sf(&self, x: f64) -> f64 {
        match self.family {
            Family::Gumbel => -(-(-x).exp()).exp_m1(),
            Family::Beta { a, b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else if x >= 0.5 {
                    beta_reg(b, a, 1.0 - x)
                } else {
                    1.0 - beta_reg(a, b, x)
                }
            }
            // Remaining families are symmetric about zero.
            _ => self.base_cdf(-x),
        }
    }

    fn base_quantile(&self, u: f64) -> f64 {
        let p = u.min(1.0 - u);
        let lower = u <= 0.5;
        let reflect = |t: f64| if lower { -t } else { t };
        match (&self.family, &self.inner) {
            (Family::Gaussian, _) => reflect(gaussian_upper_quantile(p)),
            (Family::Laplace { l }, _) => reflect(-(2.0 * p).ln() / l),
            (_, Inner::Piecewise(pl)) => pl.quantile(u),
            (Family::Subbotin { beta }, Inner::Subbotin { ln_norm, .. }) => {
                reflect(subbotin_upper_quantile(*beta, *ln_norm, p))
            }
            (Family::Gumbel, _) => -(-u.ln()).ln(),
            (Family::Beta { .. }, _) => self.beta_quantile_pair(u).0,
            _ => unreachable!(),
        }
    }

    /// `(x, 1 - x)` with `x = F^{-1}(u)`, each side solved on its own tail.
    fn beta_quantile_pair(&self, u: f64) -> (f64, f64) {
        let Family::Beta { a, b } = self.family else {
            unreachable!()
        };
        let Inner::Beta { ln_b } = self.inner else {
            unreachable!()
        };
        if u <= 0.5 {
            let x = beta_invert(a, b, ln_b, u);
            (x, 1.0 - x)
        } else {
            let y = beta_invert(b, a, ln_b, 1.0 - u);
            (1.0 - y, y)
        }
    }

    fn base_j(&self, u: f64) -> f64 {
        match self.family {
            Family::Laplace { l } => l * u.min(1.0 - u),
            Family::FlattenedLaplace { a, h } if h == 0.0 => a * u.min(1.0 - u).min(0.5 / (a * a)),
            Family::Gumbel => -u * u.ln(),
            Family::Gaussian => {
                let z = gaussian_upper_quantile(u.min(1.0 - u));
                (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
            }
            _ => self.base_pdf(self.base_quantile(u)),
        }
    }

    fn base_j_prime(&self, u: f64) -> f64 {
        match self.family {
            Family::Laplace { l } => -l * sgn(u - 0.5),
            Family::FlattenedLaplace { a, h } if h == 0.0 => {
                if u.min(1.0 - u) <= 0.5 / (a * a) {
                    -a * sgn(u - 0.5)
                } else {
                    0.0
                }
            }
            Family::Gumbel => -1.0 - u.ln(),
            _ => self.base_score(self.base_quantile(u)).to_f64(),
        }
    }

    /// `int_0^p J'^2` for `p <= 1/2`, on the side where `J' > 0`; for the
    /// symmetric families by symmetry this is also the upper-tail mass.
    fn symmetric_tail(&self, p: f64) -> f64 {
        match (&self.family, &self.inner) {
            (Family::Gaussian, _) => {
                let z = gaussian_upper_quantile(p);
                p + z * (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
            }
            (Family::Laplace { l }, _) => l * l * p,
            (_, Inner::Piecewise(pl)) => pl.fisher_tail(pl.quantile(p)),
            (Family::Subbotin { beta }, Inner::Subbotin { ln_norm, fisher_half }) => {
                let t = subbotin_upper_quantile(*beta, *ln_norm, p);
                fisher_half * upper_gamma_q(2.0 - 1.0 / beta, t.powf(*beta) / beta)
            }
            _ => unreachable!(),
        }
    }

    fn is_symmetric(&self) -> bool {
        !matches!(self.family, Family::Gumbel | Family::Beta { .. })
    }

    fn base_fisher_lower(&self, u: f64) -> f64 {
        let total = self.fisher_total() / (self.scale * self.scale);
        if self.is_symmetric() {
            return if u <= 0.5 {
                self.symmetric_tail(u)
            } else {
                total - self.symmetric_tail(1.0 - u)
            };
        }
        match self.family {
            Family::Gumbel => u * (u.ln().powi(2) + 1.0),
            Family::Beta { a, b } => {
                if u <= 0.5 || total.is_infinite() {
                    let (x, _) = self.beta_quantile_pair(u);
                    beta_fisher_partial(a, b, x)
                } else {
                    total - self.base_fisher_upper(u)
                }
            }
            _ => unreachable!(),
        }
    }

    fn base_fisher_upper(&self, u: f64) -> f64 {
        let total = self.fisher_total() / (self.scale * self.scale);
        if self.is_symmetric() {
            return if u >= 0.5 {
                self.symmetric_tail(1.0 - u)
            } else {
                total - self.symmetric_tail(u)
            };
        }
        match self.family {
            Family::Gumbel => (1.0 - u) - u * u.ln().powi(2),
            Family::Beta { a, b } => {
                if u >= 0.5 || total.is_infinite() {
                    let (_, y) = self.beta_quantile_pair(u);
                    beta_fisher_partial(b, a, y)
                } else {
                    total - self.base_fisher_lower(u)
                }
            }
            _ => unreachable!(),
        }
    }
}

/// A uniform draw in the open interval `(0, 1)` with 53 random bits.
pub fn open_uniform<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `z >= 0` with `1 - Phi(z) = p`, for `p <= 1/2`.
fn gaussian_upper_quantile(p: f64) -> f64 {
    if p >= 0.5 {
        return 0.0;
    }
    let mut z = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let dens = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        if dens == 0.0 {
            break;
        }
        let resid = 0.5 * erfc(z / SQRT_2) - p;
        z += resid / dens;
    }
    z
}

/// Regularised upper incomplete gamma tail `Q(1/beta, t^beta/beta)`.
/// Regularized upper incomplete gamma with the limits at `x = 0` and `x = inf`.
fn upper_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

fn subbotin_q(beta: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    upper_gamma_q(1.0 / beta, t.powf(beta) / beta)
}

/// `t >= 0` with `P(X > t) = p`, for `p <= 1/2`.
fn subbotin_upper_quantile(beta: f64, ln_norm: f64, p: f64) -> f64 {
    if p >= 0.5 {
        return 0.0;
    }
    if beta == 1.0 {
        return -(2.0 * p).ln();
    }
    let mut hi = 1.0;
    while 0.5 * subbotin_q(beta, hi) > p {
        hi *= 2.0;
    }
    safeguarded_newton(
        |t| {
            let dens = (ln_norm - t.powf(beta) / beta).exp();
            (0.5 * subbotin_q(beta, t) - p, -dens)
        },
        0.0,
        hi,
    )
}

/// Solves `I_x(a, b) = p` for `x` in `(0, 1)`.
fn beta_invert(a: f64, b: f64, ln_b: f64, p: f64) -> f64 {
    safeguarded_newton(
        |x| {
            let dens = ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b).exp();
            (beta_reg(a, b, x) - p, dens)
        },
        0.0,
        1.0,
    )
}

/// `int_0^x psi^2 f` for Beta(a, b).
fn beta_fisher_partial(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if a <= 2.0 {
        return f64::INFINITY;
    }
    let s = (a + b - 1.0) * (a + b - 2.0);
    if b > 2.0 {
        return s
            * ((a - 1.0) / (a - 2.0) * beta_reg(a - 2.0, b, x) - 2.0 * beta_reg(a - 1.0, b - 1.0, x)
                + (b - 1.0) / (b - 2.0) * beta_reg(a, b - 2.0, x));
    }
    if x >= 1.0 {
        return f64::INFINITY;
    }
    let ln_b = ln_beta(a, b);
    let integrand = |t: f64| {
        let psi = (a - 1.0) / t - (b - 1.0) / (1.0 - t);
        psi * psi * ((a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - ln_b).exp()
    };
    integrate(integrand, 0.0, x, 1e-13)
        .map(|i| i.value)
        .unwrap_or(f64::NAN)
}

// ---- model specification strings ---------------------------------------

impl fmt::Display for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params = match self.family {
            Family::Gaussian | Family::Gumbel => vec![],
            Family::Laplace { l } => vec![format!("L={l}")],
            Family::FlattenedLaplace { a, h } => vec![format!("a={a}"), format!("h={h}")],
            Family::Subbotin { beta } => vec![format!("beta={beta}")],
            Family::Beta { a, b } => vec![format!("a={a}"), format!("b={b}")],
        };
        if self.scale != 1.0 {
            params.push(format!("scale={}", self.scale));
        }
        f.write_str(self.family.name())?;
        if !params.is_empty() {
            write!(f, ":{}", params.join(","))?;
        }
        Ok(())
    }
}

/// Parses `family` and `key=value` pairs into a model.
pub fn model_from_parts<'a, I>(family: &str, pairs: I) -> Result<DensityModel>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut kv: Vec<(String, f64)> = Vec::new();
    for p in pairs {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {p:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("parameter {k}: not a number: {v:?}")))?;
        kv.push((k.trim().to_string(), v));
    }
    let mut take = |names: &[&str], default: Option<f64>| -> Result<f64> {
        if let Some(i) = kv.iter().position(|(k, _)| names.contains(&k.as_str())) {
            return Ok(kv.remove(i).1);
        }
        default.ok_or_else(|| Error::InvalidConfig(format!("{family}: missing parameter {}", names[0])))
    };
    let fam = match family.trim().to_ascii_lowercase().as_str() {
        "gaussian" | "normal" => Family::Gaussian,
        "laplace" => Family::Laplace {
            l: take(&["L", "l"], Some(1.0))?,
        },
        "flattened-laplace" | "flattened_laplace" | "flat-laplace" => Family::FlattenedLaplace {
            a: take(&["a"], None)?,
            h: take(&["h", "hshift"], Some(0.0))?,
        },
        "subbotin" => Family::Subbotin {
            beta: take(&["beta"], None)?,
        },
        "gumbel" => Family::Gumbel,
        "beta" => Family::Beta {
            a: take(&["a"], None)?,
            b: take(&["b"], None)?,
        },
        other => return Err(Error::InvalidConfig(format!("unknown model family {other:?}"))),
    };
    let scale = take(&["scale"], Some(1.0))?;
    if let Some((k, _)) = kv.first() {
        return Err(Error::InvalidConfig(format!(
            "{family}: unknown parameter {k:?}"
        )));
    }
    DensityModel::new(fam)?.with_scale(scale)
}

impl FromStr for DensityModel {
    type Err = Error;

    /// Accepts `family` or `family:k=v,k=v`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, rest) = s.split_once(':').unwrap_or((s, ""));
        model_from_parts(fam, rest.split(','))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zoo() -> Vec<DensityModel> {
        [
            "gaussian",
            "laplace:L=2",
            "flattened-laplace:a=1.4142135623730951",
            "flattened-laplace:a=2,h=0.3",
            "subbotin:beta=1.5",
            "gumbel",
            "beta:a=3,b=3",
            "beta:a=2.5,b=6",
            "beta:a=1.5,b=4",
            "gaussian:scale=2",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
    }

    #[test]
    fn documented_point_values() {
        let lap: DensityModel = "laplace:L=2".parse().unwrap();
        assert_relative_eq!(lap.j(0.25), 0.5, epsilon = 1e-15);
        let fl = make_model(Family::FlattenedLaplace { a: SQRT_2, h: 0.0 }).unwrap();
        assert_relative_eq!(fl.j(0.5), SQRT_2 * 0.25, epsilon = 1e-15);
        let b = make_model(Family::Beta { a: 3.0, b: 3.0 }).unwrap();
        assert_eq!(b.score(0.5), ExtReal::ZERO);
    }

    #[test]
    fn parameter_validation_names_the_constraint() {
        let e = make_model(Family::FlattenedLaplace { a: 1.2, h: 0.1 }).unwrap_err();
        assert!(e.to_string().contains("sqrt(2)"), "{e}");
        assert!(make_model(Family::Laplace { l: 0.0 }).is_err());
        assert!(make_model(Family::Beta { a: 1.0, b: 2.0 }).is_err());
        assert!(make_model(Family::Subbotin { beta: 0.5 }).is_err());
        assert!(make_model(Family::FlattenedLaplace { a: 2.0, h: 0.6 }).is_err());
        assert!("laplace:M=2".parse::<DensityModel>().is_err());
        assert!("cauchy".parse::<DensityModel>().is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for m in zoo() {
            let again: DensityModel = m.to_string().parse().unwrap();
            assert_eq!(again, m);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in zoo() {
            for u in [1e-12, 1e-6, 0.001, 0.1, 0.37, 0.5, 0.8, 0.999, 1.0 - 1e-9] {
                let x = m.quantile(u);
                let back = if u <= 0.5 { m.cdf(x) } else { 1.0 - m.sf(x) };
                assert!((back - u).abs() <= 1e-10, "{m} u={u} got {back}");
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for m in zoo() {
            let (lo, hi) = m.support();
            let lo = if lo.is_finite() { lo } else { m.quantile(1e-15) };
            let hi = if hi.is_finite() { hi } else { m.quantile(1.0 - 1e-15) };
            let i = integrate_pieces(|x| m.pdf(x), lo, hi, &m.breakpoints(), 1e-11).unwrap();
            assert!((i.value - 1.0).abs() < 1e-8, "{m}: {}", i.value);
        }
    }

    #[test]
    fn j_and_j_prime_match_composition() {
        for m in zoo() {
            for k in 1..=999 {
                let u = k as f64 / 1000.0;
                let x = m.quantile(u);
                assert!((m.j(u) - m.pdf(x)).abs() < 1e-8, "{m} u={u}");
                let s = m.score(x).to_f64();
                assert!((m.j_prime(u) - s).abs() < 1e-8 * (1.0 + s.abs()), "{m} u={u}");
            }
        }
    }

    #[test]
    fn fisher_information_known_values() {
        let cases = [
            ("laplace:L=2", 4.0),
            ("flattened-laplace:a=1", 1.0),
            ("flattened-laplace:a=3", 1.0),
            ("gaussian", 1.0),
            ("gumbel", 1.0),
            ("subbotin:beta=2", 1.0),
            ("subbotin:beta=1", 1.0),
            ("beta:a=3,b=3", 40.0),
            ("gaussian:scale=0.5", 0.25),
        ];
        for (s, want) in cases {
            let m: DensityModel = s.parse().unwrap();
            assert_relative_eq!(m.fisher_total(), want, epsilon = 1e-12);
            let q = m.fisher_information(1e-9).unwrap();
            assert!((q - want).abs() < 1e-8, "{s}: {q}");
        }
        let b: DensityModel = "beta:a=1.5,b=4".parse().unwrap();
        assert_eq!(b.fisher_information(1e-9).unwrap(), f64::INFINITY);
    }

    #[test]
    fn partial_fisher_integrals_match_quadrature() {
        for m in zoo() {
            if m.fisher_total().is_infinite() {
                continue;
            }
            for (u0, u1) in [(0.05, 0.3), (0.2, 0.9), (0.6, 0.97)] {
                let direct = integrate_pieces(
                    |u| m.j_prime(u).powi(2),
                    u0,
                    u1,
                    &m.u_breakpoints(),
                    1e-12,
                )
                .unwrap()
                .value;
                let exact = m.fisher_lower(u1) - m.fisher_lower(u0);
                assert!((direct - exact).abs() < 1e-9, "{m} [{u0},{u1}] {direct} vs {exact}");
                let exact_up = m.fisher_upper(u0) - m.fisher_upper(u1);
                assert!((direct - exact_up).abs() < 1e-9, "{m}");
            }
        }
    }

    #[test]
    fn j_prime_is_non_increasing_and_j_concave() {
        for m in zoo() {
            let us: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
            for w in us.windows(2) {
                assert!(m.j_prime(w[1]) <= m.j_prime(w[0]) + 1e-9, "{m}");
            }
            for w in us.windows(3) {
                let mid = m.j(w[1]);
                assert!(mid + 1e-12 >= 0.5 * (m.j(w[0]) + m.j(w[2])), "{m}");
            }
            assert_eq!(m.j(0.0), 0.0);
            assert_eq!(m.j(1.0), 0.0);
        }
    }

    #[test]
    fn score_conventions_outside_support() {
        let b: DensityModel = "beta:a=3,b=3".parse().unwrap();
        assert_eq!(b.score(-0.1), ExtReal::PosInf);
        assert_eq!(b.score(0.0), ExtReal::PosInf);
        assert_eq!(b.score(1.0), ExtReal::NegInf);
        assert_eq!(b.pdf(1.5), 0.0);
        assert_eq!(b.j_prime(0.0), f64::INFINITY);
    }

    #[test]
    fn subbotin_one_is_laplace_one() {
        let s: DensityModel = "subbotin:beta=1".parse().unwrap();
        let l: DensityModel = "laplace:L=1".parse().unwrap();
        for k in -40..=40 {
            let x = k as f64 * 0.173;
            assert_relative_eq!(s.pdf(x), l.pdf(x), epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(s.cdf(x), l.cdf(x), epsilon = 1e-12, max_relative = 1e-12);
            assert_eq!(s.score(x), l.score(x));
        }
    }

    #[test]
    fn gumbel_density_quantile_identity() {
        let g: DensityModel = "gumbel".parse().unwrap();
        for k in 1..=20 {
            let u = k as f64 / 21.0;
            let x = g.quantile(u);
            assert_relative_eq!(g.pdf(x), u * (1.0 / u).ln(), epsilon = 1e-14);
            assert_relative_eq!(g.j_prime(u), (1.0 / (std::f64::consts::E * u)).ln(), epsilon = 1e-13);
        }
    }

    #[test]
    fn flattened_laplace_perturbation_bounds() {
        let a = 2.0;
        let f0 = make_model(Family::FlattenedLaplace { a, h: 0.0 }).unwrap();
        let fh = make_model(Family::FlattenedLaplace { a, h: 0.4 }).unwrap();
        let Inner::Piecewise(p0) = &f0.inner else { panic!() };
        let Inner::Piecewise(ph) = &fh.inner else { panic!() };
        let ratio = p0.normalizer() / ph.normalizer();
        assert!((1.0..=4.0 / 3.0).contains(&ratio));
        for k in -300..=300 {
            let x = k as f64 * 0.01;
            assert!(fh.pdf(x) <= f0.pdf(x) * ratio * (1.0 + 1e-14));
            assert!(fh.log_pdf(x) - f0.log_pdf(x) <= (4.0f64 / 3.0).ln() + 1e-14);
        }
    }

    #[test]
    fn scaling_transforms_every_evaluator() {
        let m: DensityModel = "laplace:L=1".parse().unwrap();
        let s = m.clone().with_scale(2.0).unwrap();
        assert_eq!(s.pdf(0.3), 2.0 * m.pdf(0.6));
        assert_eq!(s.score(0.3), ExtReal::Finite(-2.0));
        assert_eq!(s.quantile(0.2), m.quantile(0.2) / 2.0);
        assert_eq!(s.j(0.2), 2.0 * m.j(0.2));
        assert_eq!(s.fisher_total(), 4.0);
    }

    #[test]
    fn sampling_is_seeded_and_respects_support() {
        let g: DensityModel = "gaussian".parse().unwrap();
        assert_eq!(g.sample(5, 7).unwrap(), g.sample(5, 7).unwrap());
        assert_ne!(g.sample(5, 7).unwrap(), g.sample(5, 8).unwrap());
        let b: DensityModel = "beta:a=3,b=3".parse().unwrap();
        let s = b.sample(10_000, 2).unwrap();
        assert!(s.values().iter().all(|&x| x > 0.0 && x < 1.0));
        let l: DensityModel = "laplace:L=1".parse().unwrap();
        let s = l.sample(100_000, 1).unwrap();
        let v = s.values();
        let med = 0.5 * (v[49_999] + v[50_000]);
        assert!(med.abs() < 0.02, "{med}");
    }
}
