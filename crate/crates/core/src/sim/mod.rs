//! Seeded Monte Carlo experiments: band coverage, good-event frequency,
//! loss rates and pointwise errors.

mod config;
pub mod stats;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::band::{multiscale_band, BandCurve, GridOptions, GridSpec};
use crate::concentration::{epsilon_threshold, goodevent_stat};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::kernels::Sample;
use crate::loss::{l2_loss, LossOptions, StepCurve};
use crate::numeric::linspace;
use crate::zoo::DensityModel;

pub use config::{parse_delta, DeltaPolicy, Experiment, ExperimentConfig, CONFIG_KEYS};
use stats::{fit_log_slope, mean, mean_se, median, median_se, proportion_se, SlopeFit};

/// Quantile range of the coverage grid.
pub const QUANTILE_RANGE: (f64, f64) = (0.01, 0.99);

/// Independent stream for replication `rep`: the master seed keys the
/// generator and `rep` selects the stream, so rep `k` sees the same
/// uniforms at every `n`.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Runs `f` on a pool capped by `SCOREBAND_THREADS` when that is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("SCOREBAND_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0);
    match cap.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRecord {
    pub rep: usize,
    pub n: usize,
    pub delta: f64,
    pub loss: Option<f64>,
    /// Band contains the true score at every quantile-grid point.
    pub covered: Option<bool>,
    pub goodevent: Option<bool>,
    pub max_stat: Option<f64>,
    pub monotone: Option<bool>,
    /// Quantile-grid points where the truth is covered but the estimate is
    /// farther from it than zero is.
    pub shrinkage_violations: Option<usize>,
    /// The refined band is nested in the coarse one at shared points.
    pub refinement_nested: Option<bool>,
    pub refined_covered: Option<bool>,
    pub crossings: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pointwise: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub delta: f64,
    pub reps: usize,
    pub coverage: Option<f64>,
    pub coverage_se: Option<f64>,
    pub goodevent_failure: Option<f64>,
    pub goodevent_failure_se: Option<f64>,
    pub median_loss: Option<f64>,
    pub mean_loss: Option<f64>,
    pub loss_se: Option<f64>,
    pub monotone_fraction: Option<f64>,
    pub shrinkage_violations: Option<usize>,
    pub refinement_violations: Option<usize>,
    pub mean_crossings: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseSummary {
    pub n: usize,
    pub x: f64,
    pub truth: ExtReal,
    pub median_error: f64,
    /// Bootstrap standard error of the median.
    pub median_error_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub model: String,
    pub seed: u64,
    pub delta_policy: DeltaPolicy,
    /// The config text, verbatim.
    pub config: String,
    pub quantile_grid: QuantileGrid,
    pub cells: Vec<CellSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_slope: Option<SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_loss: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pointwise: Vec<PointwiseSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    pub reps: Vec<RepRecord>,
}

fn quantile_points(model: &DensityModel, points: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = linspace(QUANTILE_RANGE.0, QUANTILE_RANGE.1, points)
        .into_iter()
        .map(|u| model.quantile(u))
        .collect();
    xs.dedup();
    xs
}

fn contains(curve: &BandCurve, i: usize, truth: ExtReal) -> bool {
    curve.lower[i] <= truth && truth <= curve.upper[i]
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    qpoints: Vec<f64>,
    need_band: bool,
    need_loss: bool,
    need_goodevent: bool,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        let e = cfg.experiment;
        Self {
            cfg,
            qpoints: quantile_points(&cfg.model, cfg.ugrid_points),
            need_band: e != Experiment::Goodevent,
            need_loss: matches!(e, Experiment::Coverage | Experiment::Rates),
            need_goodevent: e == Experiment::Goodevent || cfg.check_goodevent,
        }
    }

    fn band(&self, sample: &Sample, delta: f64, opts: &GridOptions) -> Result<(GridSpec, BandCurve)> {
        let grid = GridSpec::for_sample(sample, opts)?;
        let band = multiscale_band(sample, delta, &grid)?;
        Ok((grid, band))
    }

    fn rep(&self, n: usize, rep: usize) -> Result<RepRecord> {
        let cfg = self.cfg;
        let model = &cfg.model;
        let delta = cfg.delta.delta(n);
        let mut rng = rep_rng(cfg.seed, rep);
        let sample = model.sample_with(&mut rng, n)?;
        let mut r = RepRecord {
            rep,
            n,
            delta,
            loss: None,
            covered: None,
            goodevent: None,
            max_stat: None,
            monotone: None,
            shrinkage_violations: None,
            refinement_nested: None,
            refined_covered: None,
            crossings: None,
            pointwise: Vec::new(),
        };
        if self.need_goodevent {
            let g = goodevent_stat(&sample, model, delta)?;
            r.goodevent = Some(g.holds);
            r.max_stat = Some(g.max_stat);
        }
        if !self.need_band {
            return Ok(r);
        }
        let mut extra = self.qpoints.clone();
        extra.extend_from_slice(&cfg.xgrid);
        let opts = cfg.grid_options(extra);
        let (grid, band) = self.band(&sample, delta, &opts)?;
        r.monotone = Some(band.estimate.windows(2).all(|w| w[1] <= w[0]));
        r.crossings = Some(band.crossings());
        let coverage = |b: &BandCurve| -> (bool, usize) {
            let mut covered = true;
            let mut violations = 0;
            for &x in &self.qpoints {
                let i = b.index_of(x).expect("quantile point on the grid");
                let truth = model.score(x);
                if contains(b, i, truth) {
                    let t = truth.to_f64();
                    if (b.estimate[i] - t).abs() > t.abs() {
                        violations += 1;
                    }
                } else {
                    covered = false;
                }
            }
            (covered, violations)
        };
        if cfg.experiment == Experiment::Coverage {
            let (covered, violations) = coverage(&band);
            r.covered = Some(covered);
            r.shrinkage_violations = Some(violations);
        }
        if cfg.check_refinement {
            let finer = GridOptions {
                levels: Some(grid.levels + 2),
                grid_points: 2 * cfg.grid_points - 1,
                ..opts.clone()
            };
            let refined_grid = grid.union(&GridSpec::for_sample(&sample, &finer)?)?;
            let refined = multiscale_band(&sample, delta, &refined_grid)?;
            let nested = band.x.iter().enumerate().all(|(i, &x)| {
                let j = refined.index_of(x).expect("refined grid contains the coarse grid");
                refined.upper[j] <= band.upper[i] && refined.lower[j] >= band.lower[i]
            });
            r.refinement_nested = Some(nested);
            r.refined_covered = Some(coverage(&refined).0);
        }
        if self.need_loss {
            r.loss = Some(l2_loss(&band, model, &LossOptions::default())?.total);
        }
        if cfg.experiment == Experiment::Pointwise {
            r.pointwise = cfg
                .xgrid
                .iter()
                .map(|&x| {
                    let i = band.index_of(x).expect("xgrid point on the grid");
                    model.score(x).finite().map(|t| (band.estimate[i] - t).abs())
                })
                .collect();
        }
        Ok(r)
    }
}

fn summarize(cfg: &ExperimentConfig, n: usize, recs: &[RepRecord]) -> CellSummary {
    let reps = recs.len();
    let frac = |f: &dyn Fn(&RepRecord) -> Option<bool>| -> Option<f64> {
        let v: Vec<bool> = recs.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().filter(|&&b| b).count() as f64 / v.len() as f64)
    };
    let coverage = frac(&|r| r.covered);
    let failure = frac(&|r| r.goodevent.map(|h| !h));
    let losses: Vec<f64> = recs.iter().filter_map(|r| r.loss).collect();
    let sum_opt = |f: &dyn Fn(&RepRecord) -> Option<usize>| -> Option<usize> {
        let v: Vec<usize> = recs.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum())
    };
    let crossings: Vec<f64> = recs.iter().filter_map(|r| r.crossings.map(|c| c as f64)).collect();
    CellSummary {
        n,
        delta: cfg.delta.delta(n),
        reps,
        coverage,
        coverage_se: coverage.map(|p| proportion_se(p, reps)),
        goodevent_failure: failure,
        goodevent_failure_se: failure.map(|p| proportion_se(p, reps)),
        median_loss: (!losses.is_empty()).then(|| median(&losses)),
        mean_loss: (!losses.is_empty()).then(|| mean(&losses)),
        loss_se: (!losses.is_empty()).then(|| mean_se(&losses)),
        monotone_fraction: frac(&|r| r.monotone),
        shrinkage_violations: sum_opt(&|r| r.shrinkage_violations),
        refinement_violations: sum_opt(&|r| r.refinement_nested.map(|ok| usize::from(!ok))),
        mean_crossings: (!crossings.is_empty()).then(|| mean(&crossings)),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let plan = Plan::new(cfg);
    let jobs: Vec<(usize, usize)> = cfg
        .n
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let reps: Vec<RepRecord> =
        with_thread_cap(|| jobs.par_iter().map(|&(n, rep)| plan.rep(n, rep)).collect::<Result<_>>())?;
    let cells: Vec<CellSummary> = reps
        .chunks(cfg.reps)
        .map(|chunk| summarize(cfg, chunk[0].n, chunk))
        .collect();
    let mut report = ExperimentReport {
        experiment: cfg.experiment,
        model: cfg.model.to_string(),
        seed: cfg.seed,
        delta_policy: cfg.delta,
        config: cfg.source.clone(),
        quantile_grid: QuantileGrid {
            lo: QUANTILE_RANGE.0,
            hi: QUANTILE_RANGE.1,
            points: cfg.ugrid_points,
        },
        cells,
        slope: None,
        control_slope: None,
        control_loss: None,
        pointwise: Vec::new(),
        wall_clock_seconds: None,
        reps,
    };
    match cfg.experiment {
        Experiment::Rates => {
            let (ns, losses) = losses_by_n(&report);
            report.slope = Some(fit_log_slope(&ns, &losses, cfg.bootstrap, cfg.seed));
            if cfg.control {
                let zero = l2_loss(&StepCurve::constant(0.0), &cfg.model, &LossOptions::default())?.total;
                let flat: Vec<Vec<f64>> = losses.iter().map(|l| vec![zero; l.len()]).collect();
                report.control_loss = Some(zero);
                report.control_slope = Some(fit_log_slope(&ns, &flat, cfg.bootstrap, cfg.seed));
            }
        }
        Experiment::Pointwise => {
            let mut rng = rep_rng(cfg.seed, usize::MAX);
            for chunk in report.reps.chunks(cfg.reps) {
                for (k, &x) in cfg.xgrid.iter().enumerate() {
                    let errs: Vec<f64> = chunk.iter().filter_map(|r| r.pointwise[k]).collect();
                    if errs.is_empty() {
                        continue;
                    }
                    report.pointwise.push(PointwiseSummary {
                        n: chunk[0].n,
                        x,
                        truth: cfg.model.score(x),
                        median_error: median(&errs),
                        median_error_se: median_se(&errs, cfg.bootstrap, &mut rng),
                    });
                }
            }
        }
        _ => {}
    }
    if cfg.record_timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

/// Per-`n` losses in config order, as used by the slope fit.
pub fn losses_by_n(report: &ExperimentReport) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut ns: Vec<usize> = Vec::new();
    let mut losses: Vec<Vec<f64>> = Vec::new();
    for r in &report.reps {
        let Some(l) = r.loss else { continue };
        match ns.iter().position(|&n| n == r.n) {
            Some(k) => losses[k].push(l),
            None => {
                ns.push(r.n);
                losses.push(vec![l]);
            }
        }
    }
    (ns, losses)
}

fn expect(cfg: &ExperimentConfig, e: Experiment) -> Result<()> {
    if cfg.experiment == e {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "config is for `{}`, not `{}`",
            cfg.experiment.name(),
            e.name()
        )))
    }
}

/// Fraction of reps whose band covers the true score on the whole quantile grid.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect(cfg, Experiment::Coverage)?;
    execute(cfg)
}

/// Median loss per `n` and the fitted log-log slope.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect(cfg, Experiment::Rates)?;
    execute(cfg)
}

/// Frequency of the good event.
pub fn run_goodevent(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect(cfg, Experiment::Goodevent)?;
    execute(cfg)
}

/// Median absolute estimation error at each point of `xgrid`.
pub fn run_pointwise(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    expect(cfg, Experiment::Pointwise)?;
    execute(cfg)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    execute(cfg)
}

/// Good-event failure fraction at other confidence levels, reusing the
/// realized statistics of a run.
pub fn goodevent_failure_at(report: &ExperimentReport, n: usize, deltas: &[f64]) -> Vec<f64> {
    let stats: Vec<f64> = report
        .reps
        .iter()
        .filter(|r| r.n == n)
        .filter_map(|r| r.max_stat)
        .collect();
    deltas
        .iter()
        .map(|&d| {
            if n <= 2 {
                return 0.0;
            }
            let t = epsilon_threshold(n, d);
            stats.iter().filter(|&&s| s >= t).count() as f64 / stats.len().max(1) as f64
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Per-rep table with columns `rep, n, loss, covered, goodevent`.
    pub fn reps_csv(&self) -> String {
        let mut s = String::from("rep,n,loss,covered,goodevent\n");
        for r in &self.reps {
            let _ = writeln!(s, "{},{},{},{},{}", r.rep, r.n, opt(r.loss), opt(r.covered), opt(r.goodevent));
        }
        s
    }

    /// Writes `report.json` and `reps.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("reps.csv"), self.reps_csv())?;
        Ok(())
    }
}
