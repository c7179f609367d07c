mod common;

use common::{model, naive_kde, naive_kde_deriv, naive_kl, quantile_grid, ZOO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scoreband::band::{band_at_scale, GridOptions, GridSpec};
use scoreband::concentration::{goodevent_stat, kl, kl_plus};
use scoreband::loss::{l2_loss, LossOptions, ScoreCurve, StepCurve};
use scoreband::quadrature::integrate_pieces;
use scoreband::smoothed::SmoothedOracle;
use scoreband::{ExtReal, Sample};

#[test]
fn smoothed_score_sandwiches_the_true_score() {
    for spec in ZOO {
        let m = model(spec);
        let xs: Vec<f64> = quantile_grid(50).into_iter().map(|u| m.quantile(u)).collect();
        for h in [0.05, 0.2, 1.0] {
            let o = SmoothedOracle::new(m.clone(), h, 1e-12).unwrap();
            for &x in &xs {
                let truth = m.score(x);
                let right = o.eval(x + h).unwrap().psi_h;
                let left = o.eval(x - h).unwrap().psi_h;
                let le = |a: ExtReal, b: ExtReal| match (a, b) {
                    (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b + 1e-6,
                    _ => a <= b,
                };
                assert!(le(right, truth), "{spec} h={h} x={x}: {right} > {truth}");
                assert!(le(truth, left), "{spec} h={h} x={x}: {truth} > {left}");
            }
        }
    }
}

#[test]
fn kernel_estimates_match_direct_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..100 {
        let n = rng.random_range(3..400);
        let offset = if case % 3 == 0 { 1e3 } else { 0.0 };
        let xs: Vec<f64> = (0..n).map(|_| offset + rng.random::<f64>().powi(2) * 4.0).collect();
        let s = Sample::from_slice(&xs).unwrap();
        let h = 10f64.powf(rng.random_range(-2.0..0.7));
        let x = offset + rng.random_range(-0.5..4.5);
        let (a, b) = (s.kde_tri(h, x).unwrap(), naive_kde(&xs, h, x));
        let scale = 1.0 / (n as f64 * h);
        assert!((a - b).abs() <= 1e-12 * b.abs().max(scale), "case {case}: {a} vs {b}");
        let (a, b) = (s.kde_tri_deriv(h, x).unwrap(), naive_kde_deriv(&xs, h, x));
        assert!((a - b).abs() <= 1e-12 * b.abs().max(scale / h), "case {case}: {a} vs {b}");
    }
}

#[test]
fn kernel_estimate_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..60).map(|_| rng.random_range(-2.0..3.0)).collect();
    let s = Sample::from_slice(&xs).unwrap();
    for h in [0.01, 0.3, 2.0] {
        let mut breaks: Vec<f64> = xs.iter().flat_map(|&x| [x - h, x, x + h]).collect();
        breaks.sort_by(f64::total_cmp);
        let i = integrate_pieces(|x| s.kde_tri(h, x).unwrap(), -2.0 - h, 3.0 + h, &breaks, 1e-9).unwrap();
        assert!((i.value - 1.0).abs() < 1e-6, "h={h}: {}", i.value);
        for &x in &breaks {
            let v = s.kde_tri(h, x).unwrap();
            assert!((0.0..=1.0 / h).contains(&v));
        }
    }
}

#[test]
fn kl_matches_the_direct_formula_and_its_quadratic_lower_bound() {
    let grid: Vec<f64> = (1..40).map(|k| k as f64 / 40.0).collect();
    for &p in &grid {
        for &q in &grid {
            let v = kl(p, q).unwrap();
            assert!((v - naive_kl(p, q)).abs() <= 1e-14 * v.max(1.0));
            let lower = 9.0 * (p - q).powi(2) / (2.0 * (p + 2.0 * q) * (3.0 - p - 2.0 * q));
            assert!(lower <= v + 1e-15, "p={p} q={q}: {lower} > {v}");
        }
    }
}

#[test]
fn kl_is_jointly_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let (p1, p2, q1, q2): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
        let l: f64 = rng.random();
        let mix = kl(l * p1 + (1.0 - l) * p2, l * q1 + (1.0 - l) * q2).unwrap();
        let sep = l * kl(p1, q1).unwrap() + (1.0 - l) * kl(p2, q2).unwrap();
        assert!(mix <= sep * (1.0 + 1e-12) + 1e-15, "{mix} > {sep}");
    }
}

#[test]
fn binomial_kl_tail_obeys_the_exponential_bound() {
    let (p, n, trials) = (0.3, 50, 100_000);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let means: Vec<f64> = (0..trials)
        .map(|_| (0..n).filter(|_| rng.random_bool(p)).count() as f64 / n as f64)
        .collect();
    for eps in [0.02, 0.05, 0.1] {
        let hits = means.iter().filter(|&&y| kl_plus(y, p).unwrap() >= eps).count();
        let freq = hits as f64 / trials as f64;
        let bound = (-(n as f64) * eps).exp();
        let se = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(freq <= bound + 3.0 * se, "eps={eps}: {freq} > {bound}");
    }
}

#[test]
fn zero_estimator_loss_is_the_fisher_information() {
    for (spec, want) in [
        ("laplace:L=1", 1.0),
        ("laplace:L=3", 9.0),
        ("flattened-laplace:a=1.4142135623730951,h=0", 1.0),
        ("flattened-laplace:a=3,h=0", 1.0),
        ("gaussian", 1.0),
        ("gaussian:scale=0.5", 0.25),
    ] {
        let m = model(spec);
        let r = l2_loss(&StepCurve::constant(0.0), &m, &LossOptions::default()).unwrap();
        assert!((r.total - want).abs() <= 1e-6, "{spec}: {}", r.total);
        assert!((r.total - m.fisher_information(1e-10).unwrap()).abs() <= 1e-6);
    }
}

#[test]
fn loss_agrees_with_monte_carlo() {
    // beta(5,5) keeps the squared error's variance finite.
    let specs = [
        "gaussian",
        "laplace:L=1",
        "flattened-laplace:a=2,h=0.3",
        "subbotin:beta=1.5",
        "gumbel",
        "beta:a=5,b=5",
    ];
    let draws = 1_000_000;
    for spec in specs {
        let m = model(spec);
        let (lo, hi) = (m.quantile(0.1), m.quantile(0.9));
        let mid = 0.5 * (lo + hi);
        let step = StepCurve::new(vec![lo, mid, hi], vec![1.2, 0.4, -0.3, -1.5]).unwrap();
        let exact = l2_loss(&step, &m, &LossOptions::full_range()).unwrap().total;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xs = m.sample_with(&mut rng, draws).unwrap();
        let sq: Vec<f64> = xs
            .values()
            .iter()
            .map(|&x| (step.value(x) - m.score(x).to_f64()).powi(2))
            .collect();
        let mean = sq.iter().sum::<f64>() / draws as f64;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "{spec}: mc {mean} +- {se}, exact {exact}");
    }
}

#[test]
fn loss_scales_with_the_square_of_the_dilation() {
    for spec in ["gaussian", "laplace:L=1", "gumbel", "beta:a=3,b=3"] {
        let m = model(spec);
        let step = StepCurve::new(vec![m.quantile(0.3), m.quantile(0.6)], vec![0.7, 0.1, -0.9]).unwrap();
        let base = l2_loss(&step, &m, &LossOptions::default()).unwrap().total;
        // `with_scale(c)` is the density `c f(c x)`, whose score is `c psi(c x)`.
        for c in [0.25, 2.0, 8.0] {
            let mc = m.clone().with_scale(c).unwrap();
            let scaled = StepCurve::new(
                step.knots.iter().map(|k| k / c).collect(),
                step.values.iter().map(|v| v * c).collect(),
            )
            .unwrap();
            let l = l2_loss(&scaled, &mc, &LossOptions::default()).unwrap().total;
            assert!((l - c * c * base).abs() <= 1e-12 * (c * c * base).max(1.0), "{spec} c={c}: {l} vs {}", c * c * base);
        }
    }
}

#[test]
fn per_scale_band_contains_the_smoothed_score_on_the_good_event() {
    let m = model("gaussian");
    let delta = 0.1;
    let mut checked = 0;
    for rep in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(rep);
        let s = m.sample_with(&mut rng, 300).unwrap();
        if !goodevent_stat(&s, &m, delta).unwrap().holds {
            continue;
        }
        for h in [0.1, 0.3, 1.0] {
            let o = SmoothedOracle::new(m.clone(), h, 1e-12).unwrap();
            for k in 0..41 {
                let z = -2.0 + 0.1 * k as f64;
                let (lo, hi) = band_at_scale(&s, delta, h, z).unwrap();
                let psi = o.eval(z).unwrap().psi_h;
                assert!(lo <= psi && psi <= hi, "rep {rep} h={h} z={z}: {psi} not in [{lo}, {hi}]");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn default_grid_respects_its_bounds() {
    let m = model("laplace:L=1");
    let s = m.sample(200, 8).unwrap();
    let g = GridSpec::for_sample(&s, &GridOptions::default()).unwrap();
    let range = s.max() - s.min();
    assert_eq!(g.h_max(), range);
    assert!(g.h_min() >= range / 2f64.powi(g.levels as i32));
    assert!(g.h_min() >= s.min_positive_gap().unwrap() || g.bandwidths.len() == 1);
    assert!(g.locations.len() <= 4096);
    assert!(g.locations.iter().all(|&z| z >= s.min() - range && z <= s.max() + range));
}
