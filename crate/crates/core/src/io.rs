//! CSV readers and writers for every data kind the pipeline exchanges.
//!
//! Readers accept whitespace around fields and ignore blank lines. Writers emit
//! the shortest representation that parses back to the same `f64`, except the
//! launch-scan and field-map formats, which are rounded to six significant
//! digits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dcp::{RamseyPulse, TiltAxis, TiltPoint, TiltScan};
use crate::density::{AdevPoint, CycleRecord, Density};
use crate::environment::TemperatureSample;
use crate::error::{Error, Result};
use crate::zeeman::{FieldMap, LaunchScan, ScanPoint};

/// Round to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

fn parse_err(source: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: source.to_string(),
        message: e.to_string(),
    }
}

fn read_rows<R: Read, D: DeserializeOwned>(reader: R, source: &str) -> Result<Vec<D>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(|e| parse_err(source, e))?);
    }
    Ok(out)
}

fn write_rows<W: Write, S: Serialize>(writer: W, rows: impl IntoIterator<Item = S>, header: &[&str]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let io = |e: csv::Error| parse_err("<output>", e);
    wtr.write_record(header).map_err(io)?;
    for r in rows {
        wtr.serialize(r).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Io {
        path: "<output>".into(),
        source: e,
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

#[derive(Serialize, Deserialize)]
struct FringeRow {
    detuning_hz: f64,
    probability: f64,
}

pub fn write_lineshape<W: Write>(w: W, points: &[(f64, f64)]) -> Result<()> {
    write_rows(
        w,
        points.iter().map(|&(detuning_hz, probability)| FringeRow {
            detuning_hz,
            probability,
        }),
        &["detuning_hz", "probability"],
    )
}

pub fn read_lineshape<R: Read>(r: R, source: &str) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<FringeRow> = read_rows(r, source)?;
    Ok(rows.into_iter().map(|r| (r.detuning_hz, r.probability)).collect())
}

pub fn write_launch_scan<W: Write>(w: W, scan: &LaunchScan<f64>) -> Result<()> {
    write_rows(
        w,
        scan.entries().iter().map(|p| ScanPoint {
            height_mm: round_sig(p.height_mm, 6),
            fringe_hz: round_sig(p.fringe_hz, 6),
        }),
        &["height_mm", "fringe_hz"],
    )
}

pub fn read_launch_scan<R: Read>(r: R, source: &str) -> Result<LaunchScan<f64>> {
    let rows: Vec<ScanPoint<f64>> = read_rows(r, source)?;
    LaunchScan::new(rows).map_err(|e| parse_err(source, e))
}

#[derive(Serialize, Deserialize)]
struct FieldRow {
    z_mm: f64,
    b_nt: f64,
}

pub fn write_field_map<W: Write>(w: W, map: &FieldMap<f64>) -> Result<()> {
    write_rows(
        w,
        map.z_mm().iter().zip(map.b_nt()).map(|(z, b)| FieldRow {
            z_mm: round_sig(*z, 6),
            b_nt: round_sig(*b, 6),
        }),
        &["z_mm", "b_nt"],
    )
}

pub fn read_field_map<R: Read>(r: R, source: &str) -> Result<FieldMap<f64>> {
    let rows: Vec<FieldRow> = read_rows(r, source)?;
    let (z, b) = rows.into_iter().map(|r| (r.z_mm, r.b_nt)).unzip();
    FieldMap::new(z, b).map_err(|e| parse_err(source, e))
}

#[derive(Serialize, Deserialize)]
struct CycleRow {
    mjd: f64,
    density: Density,
    y_rel: f64,
    n_atoms: f64,
}

pub fn write_cycles<W: Write>(w: W, cycles: &[CycleRecord<f64>]) -> Result<()> {
    write_rows(
        w,
        cycles.iter().map(|c| CycleRow {
            mjd: c.mjd,
            density: c.density,
            y_rel: c.y,
            n_atoms: c.n_atoms,
        }),
        &["mjd", "density", "y_rel", "n_atoms"],
    )
}

pub fn read_cycles<R: Read>(r: R, source: &str) -> Result<Vec<CycleRecord<f64>>> {
    let rows: Vec<CycleRow> = read_rows(r, source)?;
    rows.into_iter()
        .map(|r| {
            let c = CycleRecord {
                mjd: r.mjd,
                density: r.density,
                y: r.y_rel,
                n_atoms: r.n_atoms,
            };
            c.validate().map_err(|e| parse_err(source, e))?;
            Ok(c)
        })
        .collect()
}

pub fn write_adev<W: Write>(w: W, points: &[AdevPoint<f64>]) -> Result<()> {
    write_rows(w, points, &["tau_s", "adev", "adev_err"])
}

pub fn read_adev<R: Read>(r: R, source: &str) -> Result<Vec<AdevPoint<f64>>> {
    read_rows(r, source)
}

#[derive(Serialize, Deserialize)]
struct TiltRow {
    axis: TiltAxis,
    pulse: RamseyPulse,
    theta_mrad: f64,
    dy_frac: f64,
}

pub fn write_tilt_scans<W: Write>(w: W, scans: &[TiltScan<f64>]) -> Result<()> {
    write_rows(
        w,
        scans.iter().flat_map(|s| {
            s.points.iter().map(|p| TiltRow {
                axis: s.axis,
                pulse: s.pulse,
                theta_mrad: p.theta_mrad,
                dy_frac: p.dy_frac,
            })
        }),
        &["axis", "pulse", "theta_mrad", "dy_frac"],
    )
}

/// Scans grouped by (axis, pulse) in order of first appearance.
pub fn read_tilt_scans<R: Read>(r: R, source: &str, adjustment_error_mrad: f64) -> Result<Vec<TiltScan<f64>>> {
    let rows: Vec<TiltRow> = read_rows(r, source)?;
    type Group = ((TiltAxis, RamseyPulse), Vec<TiltPoint<f64>>);
    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        let key = (row.axis, row.pulse);
        let point = TiltPoint {
            theta_mrad: row.theta_mrad,
            dy_frac: row.dy_frac,
            sigma: None,
        };
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(point),
            None => groups.push((key, vec![point])),
        }
    }
    groups
        .into_iter()
        .map(|((axis, pulse), points)| {
            TiltScan::new(axis, pulse, points, adjustment_error_mrad).map_err(|e| parse_err(source, e))
        })
        .collect()
}

pub fn write_temperature_log<W: Write>(w: W, log: &[TemperatureSample]) -> Result<()> {
    write_rows(w, log, &["mjd", "t_top_k", "t_bottom_k"])
}

pub fn read_temperature_log<R: Read>(r: R, source: &str) -> Result<Vec<TemperatureSample>> {
    let rows: Vec<TemperatureSample> = read_rows(r, source)?;
    if rows
        .iter()
        .any(|s| !(s.mjd.is_finite() && s.t_top_k > 0.0 && s.t_bottom_k > 0.0))
    {
        return Err(parse_err(source, "temperatures must be finite and > 0 K"));
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct MaserRow {
    mjd: f64,
    y_fountain_maser: f64,
}

/// Fountain − maser fractional frequency samples.
pub fn read_maser_comparison<R: Read>(r: R, source: &str) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<MaserRow> = read_rows(r, source)?;
    Ok(rows.into_iter().map(|r| (r.mjd, r.y_fountain_maser)).collect())
}

pub fn write_maser_comparison<W: Write>(w: W, samples: &[(f64, f64)]) -> Result<()> {
    write_rows(
        w,
        samples
            .iter()
            .map(|&(mjd, y_fountain_maser)| MaserRow { mjd, y_fountain_maser }),
        &["mjd", "y_fountain_maser"],
    )
}

#[derive(Serialize, Deserialize)]
struct UtcRow {
    mjd: f64,
    utc_minus_utclab_ns: f64,
}

/// UTC − UTC(lab) time offsets in ns.
pub fn read_utc_offsets<R: Read>(r: R, source: &str) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<UtcRow> = read_rows(r, source)?;
    Ok(rows.into_iter().map(|r| (r.mjd, r.utc_minus_utclab_ns)).collect())
}

pub fn write_utc_offsets<W: Write>(w: W, points: &[(f64, f64)]) -> Result<()> {
    write_rows(
        w,
        points.iter().map(|&(mjd, utc_minus_utclab_ns)| UtcRow {
            mjd,
            utc_minus_utclab_ns,
        }),
        &["mjd", "utc_minus_utclab_ns"],
    )
}

/// Read a file with one of the readers above.
pub fn read_path<T>(path: &Path, f: impl FnOnce(File, &str) -> Result<T>) -> Result<T> {
    f(open(path)?, &name(path))
}

/// Write a file with one of the writers above.
pub fn write_path(path: &Path, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    f(create(path)?).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: name(path),
            message,
        },
        Error::Io { source, .. } => Error::Io {
            path: name(path),
            source,
        },
        other => other,
    })
}
