//! The two CSV formats the tool reads and writes.
//!
//! Observations: header `i,y`, one row per sample, indices `1..n` in order.
//! Curve knots: header `t,sigma`, strictly increasing `t`.
//! Floats are written with Rust's shortest round-trip formatting, so files
//! parse back to bit-identical values.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use specvol::ObservationSeries;

pub fn write_observations(path: &Path, obs: &ObservationSeries) -> io::Result<()> {
    let mut out = String::with_capacity(obs.n * 24 + 8);
    out.push_str("i,y\n");
    for (i, y) in obs.values.iter().enumerate() {
        out.push_str(&format!("{},{y}\n", i + 1));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

fn bad_data(message: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, message)
}

pub fn read_observations(path: &Path, delta: f64) -> io::Result<ObservationSeries> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    match lines.next() {
        Some((_, "i,y")) => {}
        other => {
            return Err(bad_data(format!(
                "{}: expected header `i,y`, found {:?}",
                path.display(),
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut values = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| bad_data(format!("line {}: expected `i,y`", lineno + 1)))?;
        let i: usize = idx
            .parse()
            .map_err(|_| bad_data(format!("line {}: bad index {idx:?}", lineno + 1)))?;
        if i != values.len() + 1 {
            return Err(bad_data(format!(
                "line {}: index {i} out of order (expected {})",
                lineno + 1,
                values.len() + 1
            )));
        }
        let y: f64 = val
            .parse()
            .map_err(|_| bad_data(format!("line {}: bad value {val:?}", lineno + 1)))?;
        values.push(y);
    }
    ObservationSeries::from_values(values, delta)
        .map_err(|e| bad_data(format!("{}: {e}", path.display())))
}

pub fn read_knots(path: &Path) -> io::Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    match lines.next() {
        Some((_, "t,sigma")) => {}
        other => {
            return Err(bad_data(format!(
                "expected header `t,sigma`, found {:?}",
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut knots = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (t, s) = line
            .split_once(',')
            .ok_or_else(|| bad_data(format!("line {}: expected `t,sigma`", lineno + 1)))?;
        let t: f64 = t
            .parse()
            .map_err(|_| bad_data(format!("line {}: bad time {t:?}", lineno + 1)))?;
        let s: f64 = s
            .parse()
            .map_err(|_| bad_data(format!("line {}: bad sigma {s:?}", lineno + 1)))?;
        knots.push((t, s));
    }
    Ok(knots)
}

pub fn write_replicates(path: &Path, estimates: &[f64]) -> io::Result<()> {
    let mut out = String::with_capacity(estimates.len() * 24 + 12);
    out.push_str("rep,iv_hat\n");
    for (r, v) in estimates.iter().enumerate() {
        out.push_str(&format!("{r},{v}\n"));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())
}
