//! Small numerical helpers shared across modules.

/// Solves `g(x) = 0` on a bracket `[lo, hi]` where `g(lo)` and `g(hi)` have
/// opposite signs, using Newton steps guarded by bisection.
///
/// `g` returns `(value, derivative)`. Iteration stops once the bracket is
/// within a few ulps of the iterate or the residual vanishes.
pub fn safeguarded_newton<G>(g: G, mut lo: f64, mut hi: f64) -> f64
where
    G: Fn(f64) -> (f64, f64),
{
    let (glo, _) = g(lo);
    let (ghi, _) = g(hi);
    if glo == 0.0 {
        return lo;
    }
    if ghi == 0.0 {
        return hi;
    }
    // Orient so that g(lo) < 0 < g(hi).
    if glo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut gx, mut dgx) = g(x);
    for _ in 0..300 {
        let newton_ok = dgx != 0.0 && dgx.is_finite() && {
            let step = gx / dgx;
            let target = x - step;
            let inside = (target - lo) * (target - hi) < 0.0;
            inside && (2.0 * step).abs() <= dx_old.abs()
        };
        dx_old = dx;
        if newton_ok {
            dx = gx / dgx;
            x -= dx;
        } else {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
        let tol = 2.0 * f64::EPSILON * x.abs() + f64::MIN_POSITIVE;
        if dx.abs() <= tol || (hi - lo).abs() <= tol {
            return x;
        }
        let (v, d) = g(x);
        gx = v;
        dgx = d;
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    x
}

/// `sgn(x) = 2 * 1{x >= 0} - 1`, so that `sgn(0) = +1`.
pub fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Median of a slice (mean of the two central order statistics for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `n` equispaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_roots_with_relative_precision() {
        let r = safeguarded_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
        // Tiny root: precision is relative, not absolute.
        let r = safeguarded_newton(|x| (x - 1e-30, 1.0), 0.0, 1.0);
        assert!((r / 1e-30 - 1.0).abs() < 1e-12, "{r}");
        // Decreasing function.
        let r = safeguarded_newton(|x: f64| ((-x).exp() - 0.5, -(-x).exp()), 0.0, 5.0);
        assert!((r - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn sign_convention_and_median() {
        assert_eq!(sgn(0.0), 1.0);
        assert_eq!(sgn(-1e-300), -1.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }
}
