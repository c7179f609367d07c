//! Grid diagnostics for membership in the tail-growth and Hölder classes.

use serde::Serialize;

use super::DensityModel;

/// The class to test against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum ClassSpec {
    /// `|J'(u)| <= L / (u ∧ (1-u))^{(1-gamma)/2}`.
    TailGrowth { gamma: f64, l: f64 },
    /// `|psi(x) - psi(y)| <= L |x - y|^{beta - 1}`.
    Holder { beta: f64, l: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipPoint {
    pub u: f64,
    pub x: f64,
    /// Ratio against the class bound; values above one witness a violation.
    pub ratio: f64,
    /// For Hölder classes, `|J'(u)|` over the density-quantile envelope.
    pub envelope_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub spec: ClassSpec,
    pub points: Vec<MembershipPoint>,
    pub max_ratio: f64,
    pub pass: bool,
}

const SLACK: f64 = 1e-9;

/// Envelope constant `C_beta` for the Hölder density-quantile bound.
pub fn holder_envelope_constant(beta: f64) -> f64 {
    (2.0 * beta.powf(1.0 / (beta - 1.0)) * (beta - 1.0) / std::f64::consts::PI).sqrt()
}

fn holder_envelope(beta: f64, l: f64, u: f64) -> f64 {
    if beta == 1.0 {
        return l;
    }
    let m = u.min(1.0 - u);
    let lg = (holder_envelope_constant(beta) / m).ln().max(0.0);
    2.0 * l.powf(1.0 / beta) * lg.powf((beta - 1.0) / beta)
}

/// Evaluates the class bound on `ugrid` (points outside `(0, 1)` are ignored).
pub fn class_membership(model: &DensityModel, spec: ClassSpec, ugrid: &[f64]) -> MembershipReport {
    let us: Vec<f64> = ugrid.iter().copied().filter(|&u| u > 0.0 && u < 1.0).collect();
    let xs: Vec<f64> = us.iter().map(|&u| model.quantile(u)).collect();
    let points: Vec<MembershipPoint> = match spec {
        ClassSpec::TailGrowth { gamma, l } => us
            .iter()
            .zip(&xs)
            .map(|(&u, &x)| {
                let m = u.min(1.0 - u);
                MembershipPoint {
                    u,
                    x,
                    ratio: model.j_prime(u).abs() * m.powf((1.0 - gamma) / 2.0) / l,
                    envelope_ratio: None,
                }
            })
            .collect(),
        ClassSpec::Holder { beta, l } => {
            let psi: Vec<f64> = xs.iter().map(|&x| model.score(x).to_f64()).collect();
            (0..us.len())
                .map(|i| {
                    let mut worst: f64 = 0.0;
                    for j in 0..us.len() {
                        let dx = (xs[i] - xs[j]).abs();
                        let dpsi = (psi[i] - psi[j]).abs();
                        if i == j || dpsi == 0.0 {
                            continue;
                        }
                        let r = if beta == 1.0 {
                            dpsi / l
                        } else {
                            dpsi / (l * dx.powf(beta - 1.0))
                        };
                        worst = worst.max(r);
                    }
                    MembershipPoint {
                        u: us[i],
                        x: xs[i],
                        ratio: worst,
                        envelope_ratio: Some(psi[i].abs() / holder_envelope(beta, l, us[i])),
                    }
                })
                .collect()
        }
    };
    let max_ratio = points
        .iter()
        .flat_map(|p| std::iter::once(p.ratio).chain(p.envelope_ratio))
        .fold(0.0, f64::max);
    MembershipReport {
        spec,
        points,
        max_ratio,
        pass: max_ratio <= 1.0 + SLACK,
    }
}
