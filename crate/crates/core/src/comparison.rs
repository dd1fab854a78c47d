//! Chaining the fountain frequency to UTC through the local maser.
//!
//! All frequencies are fractional. The lab time scale is written `UTC(lab)`.

use serde::{Deserialize, Serialize};

use crate::budget::{round_to, rss_combine};
use crate::error::{Error, Result};
use crate::scalar::{Real, SECONDS_PER_DAY};

/// Dead-time fraction at and above which the dead-time contribution can no
/// longer be treated as negligible.
pub const DEAD_TIME_THRESHOLD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord<T> {
    pub mjd_start: f64,
    pub mjd_end: f64,
    /// Fountain − maser.
    pub y_fountain_maser: T,
    /// Maser − UTC(lab).
    pub y_maser_lab: T,
    /// UTC − UTC(lab).
    pub y_utc_lab: T,
    pub u_a: T,
    pub u_b: T,
    pub u_link_lab: T,
    pub u_link_tai: T,
    pub dead_time_fraction: f64,
}

impl<T: Real> ComparisonRecord<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mjd_end > self.mjd_start) {
            return Err(Error::invalid(format!(
                "interval end {} must follow start {}",
                self.mjd_end, self.mjd_start
            )));
        }
        for (v, what) in [
            (self.u_a, "u_a"),
            (self.u_b, "u_b"),
            (self.u_link_lab, "u_link_lab"),
            (self.u_link_tai, "u_link_tai"),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::invalid(format!("{what} must be finite and >= 0")));
            }
        }
        if !(self.y_fountain_maser.is_finite() && self.y_maser_lab.is_finite() && self.y_utc_lab.is_finite()) {
            return Err(Error::invalid("comparison frequencies must be finite"));
        }
        if !(0.0..=1.0).contains(&self.dead_time_fraction) {
            return Err(Error::invalid(format!(
                "dead-time fraction {} outside [0, 1]",
                self.dead_time_fraction
            )));
        }
        Ok(())
    }

    pub fn uptime_percent(&self) -> f64 {
        round_to(100.0 * (1.0 - self.dead_time_fraction), 1)
    }
}

/// Fountain − UTC.
pub fn chain_to_utc<T: Real>(record: &ComparisonRecord<T>) -> T {
    record.y_fountain_maser + record.y_maser_lab - record.y_utc_lab
}

/// Fountain − UTC(lab).
pub fn chain_to_lab<T: Real>(record: &ComparisonRecord<T>) -> T {
    record.y_fountain_maser + record.y_maser_lab
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonUncertainty<T> {
    pub u_total: T,
    pub dead_time_warning: bool,
}

/// RSS of the stability, systematic and link terms. Dead time is flagged,
/// never folded in.
pub fn comparison_uncertainty<T: Real>(record: &ComparisonRecord<T>) -> Result<ComparisonUncertainty<T>> {
    record.validate()?;
    Ok(ComparisonUncertainty {
        u_total: rss_combine(&[record.u_a, record.u_b, record.u_link_lab, record.u_link_tai])?,
        dead_time_warning: record.dead_time_fraction >= DEAD_TIME_THRESHOLD,
    })
}

/// One row of the comparison table, in 1e-16 where fractional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub mjd_start: f64,
    pub mjd_end: f64,
    pub d_fountain_utclab_1e16: f64,
    pub d_fountain_utc_1e16: f64,
    pub u_total_1e16: f64,
    pub uptime_percent: f64,
    pub dead_time_warning: bool,
}

pub fn compare<T: Real>(record: &ComparisonRecord<T>) -> Result<ComparisonReport> {
    let u = comparison_uncertainty(record)?;
    let e16 = |v: T| v.to_f64_lossy() * 1e16;
    Ok(ComparisonReport {
        mjd_start: record.mjd_start,
        mjd_end: record.mjd_end,
        d_fountain_utclab_1e16: e16(chain_to_lab(record)),
        d_fountain_utc_1e16: e16(chain_to_utc(record)),
        u_total_1e16: e16(u.u_total),
        uptime_percent: record.uptime_percent(),
        dead_time_warning: u.dead_time_warning,
    })
}

/// Time offset (ns) at `mjd`, linearly interpolated between tabulated points.
fn offset_at(points: &[(f64, f64)], mjd: f64) -> Result<f64> {
    let i = points.partition_point(|p| p.0 < mjd);
    if i < points.len() && points[i].0 == mjd {
        return Ok(points[i].1);
    }
    if i == 0 || i == points.len() {
        return Err(Error::OutOfRange(format!(
            "MJD {mjd} outside tabulated range {}..{}",
            points[0].0,
            points[points.len() - 1].0
        )));
    }
    let (a, b) = (points[i - 1], points[i]);
    Ok(a.1 + (b.1 - a.1) * (mjd - a.0) / (b.0 - a.0))
}

/// Mean fractional frequency over `[mjd_start, mjd_end]` from a time-offset
/// series in ns, as tabulated every few days.
pub fn frequency_from_offsets(points: &[(f64, f64)], mjd_start: f64, mjd_end: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("time-offset series needs at least two points"));
    }
    if !(mjd_end > mjd_start) {
        return Err(Error::invalid("interval end must follow start"));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("time-offset MJDs must be strictly increasing"));
    }
    let dx = offset_at(points, mjd_end)? - offset_at(points, mjd_start)?;
    Ok(dx * 1e-9 / ((mjd_end - mjd_start) * SECONDS_PER_DAY))
}

/// Mean of fractional-frequency samples falling inside the interval, and the
/// fraction of the interval they cover given a nominal sample spacing.
pub fn interval_mean(samples: &[(f64, f64)], mjd_start: f64, mjd_end: f64, spacing_days: f64) -> Result<(f64, f64)> {
    if !(mjd_end > mjd_start) || !(spacing_days > 0.0) {
        return Err(Error::invalid("interval end must follow start and spacing must be > 0"));
    }
    let inside: Vec<f64> = samples
        .iter()
        .filter(|s| s.0 >= mjd_start && s.0 < mjd_end)
        .map(|s| s.1)
        .collect();
    if inside.is_empty() {
        return Err(Error::invalid(format!("no samples within MJD {mjd_start}..{mjd_end}")));
    }
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    let covered = (inside.len() as f64 * spacing_days / (mjd_end - mjd_start)).min(1.0);
    Ok((mean, 1.0 - covered))
}
