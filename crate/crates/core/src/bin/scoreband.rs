use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scoreband::band::{multiscale_band, GridOptions, GridSpec};
use scoreband::concentration::goodevent_stat;
use scoreband::io::{band_csv, band_json, read_data};
use scoreband::sim::{parse_delta, run_experiment, with_thread_cap, ExperimentConfig};
use scoreband::zoo::model_from_parts;
use scoreband::{DensityModel, Error, Sample};

#[derive(Parser)]
#[command(name = "scoreband", version, about = "Confidence bands and estimates for log-concave score functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct GridArgs {
    /// Number of dyadic bandwidth levels J.
    #[arg(long)]
    levels: Option<usize>,
    /// Largest bandwidth.
    #[arg(long)]
    hmax: Option<f64>,
    /// Evenly spaced evaluation points across the data range.
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Band and estimate for the data in a file, one value per line.
    Estimate {
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Recorded in the output.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the experiment described by a key = value config file.
    Simulate {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config delta; a number or 1/n.
        #[arg(long)]
        delta: Option<String>,
        /// Directory for report.json and reps.csv; the report goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulates u, x, f0, score, J and J' for a zoo model.
    Zoo {
        /// Family name, optionally with parameters: laplace:L=2.
        family: String,
        /// Parameters as key=value.
        params: Vec<String>,
        #[arg(long, default_value_t = 99)]
        grid_points: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluates the good-event statistic of a data file against a model.
    Goodevent {
        data: PathBuf,
        /// Model spec, e.g. gaussian or beta:a=3,b=3.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SampleTooSmall { .. } => 3,
            Error::Parse { .. }
            | Error::InvalidConfig(_)
            | Error::ParameterOutOfRange { .. }
            | Error::NonFiniteInput { .. }
            | Error::EmptyInput
            | Error::NonPositiveBandwidth(_)
            | Error::InvalidGrid(_)
            | Error::DomainError(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn check_input(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such file", path.display())))
    }
}

fn check_output_file(out: &Option<PathBuf>) -> Result<(), Failure> {
    if let Some(p) = out {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(usage(format!("{}: directory does not exist", parent.display())));
        }
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), Failure> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--delta must lie in (0, 1), got {delta}")))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", p.display()),
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        }),
    }
}

fn load_sample(path: &Path) -> Result<Sample, Failure> {
    let values = read_data(path)?;
    if values.len() < 3 {
        return Err(Error::SampleTooSmall { n: values.len(), min: 3 }.into());
    }
    Ok(Sample::new(values)?)
}

fn estimate(
    data: &Path,
    delta: f64,
    seed: Option<u64>,
    grid: &GridArgs,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    check_input(data)?;
    check_output_file(out)?;
    check_delta(delta)?;
    let sample = load_sample(data)?;
    let opts = GridOptions {
        levels: grid.levels,
        h_max: grid.hmax,
        grid_points: grid.grid_points,
        ..GridOptions::default()
    };
    let spec = GridSpec::for_sample(&sample, &opts)?;
    let mut band = with_thread_cap(|| multiscale_band(&sample, delta, &spec))?;
    band.seed = seed;
    let text = match format {
        Format::Csv => band_csv(&band),
        Format::Json => band_json(&band),
    };
    emit(out, &text)
}

fn simulate(config: &Path, seed: Option<u64>, delta: Option<&str>, out: &Option<PathBuf>) -> Result<(), Failure> {
    check_input(config)?;
    let text = std::fs::read_to_string(config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.source.push_str(&format!("# override: seed = {s}\n"));
    }
    if let Some(d) = delta {
        cfg.delta = parse_delta(d)?;
        cfg.source.push_str(&format!("# override: delta = {d}\n"));
    }
    cfg.validate()?;
    let dir = out.clone().or_else(|| cfg.output_dir.clone());
    if let Some(d) = &dir {
        if d.exists() && !d.is_dir() {
            return Err(usage(format!("{}: not a directory", d.display())));
        }
    }
    let report = run_experiment(&cfg)?;
    match dir {
        Some(d) => report.write_to(&d).map_err(Failure::from),
        None => emit(&None, &report.to_json()),
    }
}

fn zoo(family: &str, params: &[String], points: usize, format: Format, out: &Option<PathBuf>) -> Result<(), Failure> {
    check_output_file(out)?;
    let (name, inline) = family.split_once(':').unwrap_or((family, ""));
    let pairs = inline.split(',').chain(params.iter().map(String::as_str));
    let model: DensityModel = model_from_parts(name, pairs)?;
    if points == 0 {
        return Err(usage("--grid-points must be positive"));
    }
    let rows: Vec<[f64; 6]> = (1..=points)
        .map(|k| {
            let u = k as f64 / (points + 1) as f64;
            let x = model.quantile(u);
            [u, x, model.pdf(x), model.score(x).to_f64(), model.j(u), model.j_prime(u)]
        })
        .collect();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("u,x,f0,score,J,Jprime\n");
            for r in &rows {
                let cells: Vec<String> = r.iter().map(|v| scoreband::ExtReal::from_f64(*v).to_string()).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "u": r[0], "x": r[1], "f0": r[2],
                        "score": scoreband::ExtReal::from_f64(r[3]),
                        "J": r[4], "Jprime": r[5],
                    })
                })
                .collect();
            let doc = serde_json::json!({ "model": model.to_string(), "rows": items });
            serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
        }
    };
    emit(out, &text)
}

fn goodevent(data: &Path, model: &str, delta: f64, format: Format, out: &Option<PathBuf>) -> Result<(), Failure> {
    check_input(data)?;
    check_output_file(out)?;
    check_delta(delta)?;
    let model: DensityModel = model.parse()?;
    let values = read_data(data)?;
    let sample = Sample::new(values)?;
    let g = goodevent_stat(&sample, &model, delta)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&g).expect("result serializes") + "\n",
        Format::Csv => format!(
            "n,delta,max_stat,threshold,holds\n{},{},{},{},{}\n",
            g.n, g.delta, g.max_stat, g.threshold, g.holds
        ),
    };
    emit(out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate {
            data,
            delta,
            seed,
            grid,
            format,
            out,
        } => estimate(data, *delta, *seed, grid, *format, out),
        Command::Simulate {
            config,
            seed,
            delta,
            out,
        } => simulate(config, *seed, delta.as_deref(), out),
        Command::Zoo {
            family,
            params,
            grid_points,
            format,
            out,
        } => zoo(family, params, *grid_points, *format, out),
        Command::Goodevent {
            data,
            model,
            delta,
            format,
            out,
        } => goodevent(data, model, *delta, *format, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
