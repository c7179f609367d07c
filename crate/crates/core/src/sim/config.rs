use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::band::GridOptions;
use crate::error::{Error, Result};
use crate::zoo::DensityModel;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Coverage,
    Rates,
    Goodevent,
    Pointwise,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Coverage => "coverage",
            Experiment::Rates => "rates",
            Experiment::Goodevent => "goodevent",
            Experiment::Pointwise => "pointwise",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(Experiment::Coverage),
            "rates" => Ok(Experiment::Rates),
            "goodevent" => Ok(Experiment::Goodevent),
            "pointwise" => Ok(Experiment::Pointwise),
            _ => Err(Error::InvalidConfig(format!(
                "experiment must be one of coverage, rates, goodevent, pointwise; got {s:?}"
            ))),
        }
    }
}

/// Confidence level per sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "policy", content = "value", rename_all = "lowercase")]
pub enum DeltaPolicy {
    Fixed(f64),
    /// `delta = 1/n`.
    InverseN,
}

impl DeltaPolicy {
    pub fn delta(self, n: usize) -> f64 {
        match self {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::InverseN => 1.0 / n as f64,
        }
    }
}

impl std::fmt::Display for DeltaPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaPolicy::Fixed(d) => write!(f, "{d}"),
            DeltaPolicy::InverseN => f.write_str("1/n"),
        }
    }
}

/// A fully specified Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: DensityModel,
    pub n: Vec<usize>,
    pub delta: DeltaPolicy,
    pub reps: usize,
    pub seed: u64,
    pub levels: Option<usize>,
    pub h_max: Option<f64>,
    pub bandwidths: Option<Vec<f64>>,
    pub grid_points: usize,
    pub max_locations: usize,
    /// Size of the quantile grid `u in [0.01, 0.99]` used for coverage checks.
    pub ugrid_points: usize,
    pub xgrid: Vec<f64>,
    pub bootstrap: usize,
    pub check_goodevent: bool,
    pub check_refinement: bool,
    pub control: bool,
    pub record_timing: bool,
    pub output_dir: Option<PathBuf>,
    /// The text the config was parsed from, echoed into reports.
    pub source: String,
}

/// Recognised keys with a one-line description each.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("experiment", "coverage | rates | goodevent | pointwise"),
    ("model", "density spec, e.g. laplace:L=1 or beta:a=3,b=3"),
    ("n", "comma-separated sample sizes"),
    ("delta", "confidence parameter in (0, 1), or 1/n"),
    ("reps", "replications per sample size"),
    ("seed", "master seed"),
    ("levels", "number of dyadic bandwidth levels J"),
    ("h_max", "largest bandwidth"),
    ("bandwidths", "explicit comma-separated bandwidths"),
    ("grid_points", "evenly spaced evaluation points across the data range"),
    ("max_locations", "cap on the number of candidate centres"),
    ("ugrid_points", "points of the quantile grid on [0.01, 0.99]"),
    ("xgrid", "comma-separated points for pointwise errors"),
    ("bootstrap", "bootstrap resamples for confidence intervals"),
    ("check_goodevent", "true | false"),
    ("check_refinement", "true | false"),
    ("control", "true | false; adds the zero-estimator arm to rate runs"),
    ("record_timing", "true | false; adds wall-clock seconds to reports"),
    ("output_dir", "directory for report.json and reps.csv"),
];

fn suggestion(key: &str) -> Option<&'static str> {
    CONFIG_KEYS
        .iter()
        .map(|(k, _)| (*k, strsim::levenshtein(key, k)))
        .filter(|&(k, d)| d <= 3.max(k.len() / 3))
        .min_by_key(|&(_, d)| d)
        .map(|(k, _)| k)
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {v:?}")))
}

/// Parses a `1/n`-aware delta string.
pub fn parse_delta(v: &str) -> Result<DeltaPolicy> {
    if v.replace(' ', "") == "1/n" {
        return Ok(DeltaPolicy::InverseN);
    }
    Ok(DeltaPolicy::Fixed(parse_one("delta", v)?))
}

impl ExperimentConfig {
    /// Defaults for everything except the experiment kind and model.
    pub fn new(experiment: Experiment, model: DensityModel) -> Self {
        let mut c = Self {
            experiment,
            model,
            n: vec![500],
            delta: DeltaPolicy::Fixed(0.05),
            reps: 100,
            seed: 0,
            levels: None,
            h_max: None,
            bandwidths: None,
            grid_points: 201,
            max_locations: 4096,
            ugrid_points: 101,
            xgrid: Vec::new(),
            bootstrap: 200,
            check_goodevent: matches!(experiment, Experiment::Coverage | Experiment::Goodevent),
            check_refinement: false,
            control: experiment == Experiment::Rates,
            record_timing: false,
            output_dir: None,
            source: String::new(),
        };
        c.source = c.to_text();
        c
    }

    /// Parses the flat `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let k = k.trim().to_string();
            if !CONFIG_KEYS.iter().any(|(name, _)| *name == k) {
                let hint = suggestion(&k)
                    .map(|s| format!(" (did you mean `{s}`?)"))
                    .unwrap_or_default();
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown key `{k}`{hint}"),
                });
            }
            if pairs.iter().any(|(_, seen, _)| *seen == k) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
            pairs.push((i + 1, k, v.trim().to_string()));
        }
        let get = |k: &str| pairs.iter().find(|(_, key, _)| key == k).map(|(_, _, v)| v.as_str());
        let experiment: Experiment = get("experiment")
            .ok_or_else(|| Error::InvalidConfig("missing key `experiment`".into()))?
            .parse()?;
        let model: DensityModel = get("model")
            .ok_or_else(|| Error::InvalidConfig("missing key `model`".into()))?
            .parse()?;
        let mut c = Self::new(experiment, model);
        for (line, k, v) in &pairs {
            let v = v.as_str();
            let set = |c: &mut Self| -> Result<()> {
                match k.as_str() {
                    "experiment" | "model" => {}
                    "n" => c.n = parse_list(k, v)?,
                    "delta" => c.delta = parse_delta(v)?,
                    "reps" => c.reps = parse_one(k, v)?,
                    "seed" => c.seed = parse_one(k, v)?,
                    "levels" => c.levels = Some(parse_one(k, v)?),
                    "h_max" => c.h_max = Some(parse_one(k, v)?),
                    "bandwidths" => c.bandwidths = Some(parse_list(k, v)?),
                    "grid_points" => c.grid_points = parse_one(k, v)?,
                    "max_locations" => c.max_locations = parse_one(k, v)?,
                    "ugrid_points" => c.ugrid_points = parse_one(k, v)?,
                    "xgrid" => c.xgrid = parse_list(k, v)?,
                    "bootstrap" => c.bootstrap = parse_one(k, v)?,
                    "check_goodevent" => c.check_goodevent = parse_one(k, v)?,
                    "check_refinement" => c.check_refinement = parse_one(k, v)?,
                    "control" => c.control = parse_one(k, v)?,
                    "record_timing" => c.record_timing = parse_one(k, v)?,
                    "output_dir" => c.output_dir = Some(PathBuf::from(v)),
                    _ => unreachable!(),
                }
                Ok(())
            };
            set(&mut c).map_err(|e| match e {
                Error::InvalidConfig(message) => Error::Parse { line: *line, message },
                other => other,
            })?;
        }
        c.source = text.to_string();
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.n.is_empty() {
            return bad("n must list at least one sample size".into());
        }
        let min_n = if self.experiment == Experiment::Goodevent { 1 } else { 3 };
        if let Some(&n) = self.n.iter().find(|&&n| n < min_n) {
            return bad(format!("every n must be at least {min_n}, got {n}"));
        }
        if let DeltaPolicy::Fixed(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        if self.grid_points == 0 || self.ugrid_points == 0 {
            return bad("grid_points and ugrid_points must be positive".into());
        }
        if self.max_locations < 2 {
            return bad("max_locations must be at least 2".into());
        }
        if let Some(h) = self.h_max {
            if !(h.is_finite() && h > 0.0) {
                return bad(format!("h_max must be positive, got {h}"));
            }
        }
        if let Some(hs) = &self.bandwidths {
            if hs.is_empty() || hs.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                return bad("bandwidths must be a nonempty list of positive numbers".into());
            }
        }
        if self.xgrid.iter().any(|x| !x.is_finite()) {
            return bad("xgrid must be finite".into());
        }
        match self.experiment {
            Experiment::Rates => {
                let mut ns = self.n.clone();
                ns.sort_unstable();
                ns.dedup();
                if ns.len() < 4 {
                    return bad("rates needs at least 4 distinct values of n".into());
                }
                if (ns[ns.len() - 1] as f64) < 4.0 * ns[0] as f64 {
                    return bad("rates needs n to span at least two octaves".into());
                }
            }
            Experiment::Pointwise if self.xgrid.is_empty() => {
                return bad("pointwise needs a nonempty xgrid".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parses back to an equal config.
    pub fn to_text(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.name().into());
        kv("model", self.model.to_string());
        kv("n", join(&self.n));
        kv("delta", self.delta.to_string());
        kv("reps", self.reps.to_string());
        kv("seed", self.seed.to_string());
        if let Some(l) = self.levels {
            kv("levels", l.to_string());
        }
        if let Some(h) = self.h_max {
            kv("h_max", h.to_string());
        }
        if let Some(hs) = &self.bandwidths {
            kv("bandwidths", join(hs));
        }
        kv("grid_points", self.grid_points.to_string());
        kv("max_locations", self.max_locations.to_string());
        kv("ugrid_points", self.ugrid_points.to_string());
        if !self.xgrid.is_empty() {
            kv("xgrid", join(&self.xgrid));
        }
        kv("bootstrap", self.bootstrap.to_string());
        kv("check_goodevent", self.check_goodevent.to_string());
        kv("check_refinement", self.check_refinement.to_string());
        kv("control", self.control.to_string());
        kv("record_timing", self.record_timing.to_string());
        if let Some(d) = &self.output_dir {
            kv("output_dir", d.display().to_string());
        }
        s
    }

    /// Refreshes `source` after programmatic edits.
    pub fn finalize(mut self) -> Result<Self> {
        self.validate()?;
        self.source = self.to_text();
        Ok(self)
    }

    pub fn grid_options(&self, extra_points: Vec<f64>) -> GridOptions {
        GridOptions {
            levels: self.levels,
            h_max: self.h_max,
            bandwidths: self.bandwidths.clone(),
            grid_points: self.grid_points,
            extra_points,
            max_locations: self.max_locations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = coverage\nmodel = gaussian\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.n, vec![500]);
        assert_eq!(c.delta, DeltaPolicy::Fixed(0.05));
        assert_eq!(c.source, MINIMAL);
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "# run\nexperiment = rates\nmodel = laplace:L=2\nn = 64, 128,256,512\ndelta = 1/n\nreps = 7\nseed = 11\nh_max = 3.5\nxgrid = -0.5,0.5\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.delta, DeltaPolicy::InverseN);
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again.to_text(), c.to_text());
        assert_eq!(again.n, vec![64, 128, 256, 512]);
    }

    #[test]
    fn unknown_key_suggests_a_neighbour() {
        let err = ExperimentConfig::parse("experiment = coverage\nmodel = gaussian\nbandwith = 0.2\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("did you mean `bandwidths`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for extra in ["delta = 1", "reps = 0", "n = 2", "seed = x", "model2 = beta"] {
            assert!(ExperimentConfig::parse(&format!("{MINIMAL}{extra}\n")).is_err(), "{extra}");
        }
        assert!(ExperimentConfig::parse("experiment = rates\nmodel = gaussian\nn = 10,20,30,35\n").is_err());
        assert!(ExperimentConfig::parse("experiment = goodevent\nmodel = gaussian\nn = 2\n").is_ok());
        assert!(ExperimentConfig::parse("model = gaussian\n").is_err());
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}reps = 3\nreps = 4\n")).is_err());
    }
}
