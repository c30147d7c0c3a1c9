//! CSV files: datasets, trajectories, training curves, field snapshots and
//! probe histories.
//!
//! Datasets and trajectories are written with shortest round-trip precision
//! so reading them back reproduces every value exactly. Reports use six
//! significant digits, field snapshots nine.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{ParamTrajectory, TemperatureField};
use crate::trainer::{HeatingRecord, HistoryRow};

pub const DATASET_HEADER: [&str; 10] = ["zt12", "zt34", "zt56", "T135", "T246", "p12", "p34", "p56", "cool", "target"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["n", "phi_x", "omega_x", "phi_y", "omega_y"];
pub const CURVE_HEADER: [&str; 4] = ["epoch", "train_mae", "test_mae", "grad_norm"];

/// Formats `v` with `digits` significant digits, switching to exponent
/// notation outside `[1e-4, 10^digits)`.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -4 || exp >= digits as i32 {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.999995 -> 10.00000
    let carried = s.trim_start_matches(['-', '0', '.']);
    if carried.chars().filter(|c| c.is_ascii_digit()).count() > digits && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Six significant digits.
pub fn fmt6(v: f64) -> String {
    fmt_sig(v, 6)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Reads a headed numeric CSV, checking the header against `expected`.
fn read_numeric(path: &Path, expected: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("expected header `{}`, got `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let values = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    reason: format!("`{s}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_dataset(path: &Path, records: &[HeatingRecord]) -> Result<()> {
    write_rows(
        path,
        &DATASET_HEADER,
        records.iter().map(|r| {
            [
                r.zone_time_12,
                r.zone_time_34,
                r.zone_time_56,
                r.zone_temp_135,
                r.zone_temp_246,
                r.zone_press_12,
                r.zone_press_34,
                r.zone_press_56,
                r.cooling_time,
                r.target_temp,
            ]
            .iter()
            .map(f64::to_string)
            .collect()
        }),
    )
}

pub fn read_dataset(path: &Path) -> Result<Vec<HeatingRecord>> {
    read_numeric(path, &DATASET_HEADER)?
        .into_iter()
        .map(|(line, v)| {
            let r = HeatingRecord {
                zone_time_12: v[0],
                zone_time_34: v[1],
                zone_time_56: v[2],
                zone_temp_135: v[3],
                zone_temp_246: v[4],
                zone_press_12: v[5],
                zone_press_34: v[6],
                zone_press_56: v[7],
                cooling_time: v[8],
                target_temp: v[9],
            };
            r.validate().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: e.to_string(),
            })?;
            Ok(r)
        })
        .collect()
}

pub fn write_trajectory(path: &Path, params: &ParamTrajectory) -> Result<()> {
    write_rows(
        path,
        &TRAJECTORY_HEADER,
        (0..params.len()).map(|n| {
            vec![
                n.to_string(),
                params.phi_x[n].to_string(),
                params.omega_x[n].to_string(),
                params.phi_y[n].to_string(),
                params.omega_y[n].to_string(),
            ]
        }),
    )
}

pub fn read_trajectory(path: &Path) -> Result<ParamTrajectory> {
    let rows = read_numeric(path, &TRAJECTORY_HEADER)?;
    for (i, (line, v)) in rows.iter().enumerate() {
        if v[0] != i as f64 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: *line,
                reason: format!("expected step {i}, got {}", v[0]),
            });
        }
    }
    let col = |j: usize| rows.iter().map(|(_, v)| v[j]).collect::<Vec<_>>();
    Ok(ParamTrajectory {
        phi_x: col(1),
        omega_x: col(2),
        phi_y: col(3),
        omega_y: col(4),
    })
}

fn curve_row(row: &HistoryRow) -> Vec<String> {
    vec![
        row.epoch.to_string(),
        fmt6(row.train_mae),
        fmt6(row.test_mae),
        row.grad_norm.map(fmt6).unwrap_or_default(),
    ]
}

pub fn write_curve(path: &Path, history: &[HistoryRow]) -> Result<()> {
    write_rows(path, &CURVE_HEADER, history.iter().map(curve_row))
}

/// Appends one row to a curve file, writing the header if the file is new.
pub fn append_curve_row(path: &Path, row: &HistoryRow) -> Result<()> {
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    if fresh {
        writeln!(file, "{}", CURVE_HEADER.join(",")).map_err(io_err(path))?;
    }
    writeln!(file, "{}", curve_row(row).join(",")).map_err(io_err(path))
}

/// Field snapshot: one line per `y` index, one column per `x` index, nine
/// significant digits, no header.
pub fn write_field(path: &Path, field: &TemperatureField) -> Result<()> {
    let mut out = String::new();
    for q in 0..=field.ny() {
        let line: Vec<String> = field.row(q).iter().map(|t| fmt_sig(*t, 9)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Probe temperature per whole layer: `n,time,T`.
pub fn write_probe_history(path: &Path, history: &[f64], tau: f64) -> Result<()> {
    write_rows(
        path,
        &["n", "time", "T"],
        history
            .iter()
            .enumerate()
            .map(|(n, t)| vec![n.to_string(), fmt6(n as f64 * tau), fmt6(*t)]),
    )
}
