//! Data-file parsing and band serialization.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::band::{BandCurve, BandPoint, GridSummary};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;

/// Parses one real per line; `#` starts a comment and blank lines are skipped.
pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("non-finite value: {line:?}"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_data(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_data(&text)
}

/// `x,lower,upper,estimate`, shortest round-trip decimals, infinities as `+inf`/`-inf`.
pub fn band_csv(curve: &BandCurve) -> String {
    let mut s = String::from("x,lower,upper,estimate\n");
    for p in curve.points() {
        let _ = writeln!(s, "{},{},{},{}", p.x, p.lower, p.upper, p.estimate);
    }
    s
}

/// Reads back the output of [`band_csv`].
pub fn parse_band_csv(text: &str) -> Result<Vec<BandPoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "x,lower,upper,estimate" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header x,lower,upper,estimate".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", f.len())));
        }
        let ext = |s: &str| s.parse::<ExtReal>().map_err(&bad);
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
        out.push(BandPoint {
            x: num(f[0])?,
            lower: ext(f[1])?,
            upper: ext(f[2])?,
            estimate: num(f[3])?,
        });
    }
    Ok(out)
}

#[derive(Serialize)]
struct BandJson<'a> {
    n: usize,
    delta: f64,
    seed: Option<u64>,
    fingerprint: &'a str,
    grid: &'a GridSummary,
    crossings: usize,
    points: Vec<BandPoint>,
}

pub fn band_json(curve: &BandCurve) -> String {
    let doc = BandJson {
        n: curve.n,
        delta: curve.delta,
        seed: curve.seed,
        fingerprint: &curve.fingerprint,
        grid: &curve.grid,
        crossings: curve.crossings(),
        points: curve.points(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("band serializes");
    s.push('\n');
    s
}
