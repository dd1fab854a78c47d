//! Fractional-frequency quantities, uncertainty combination and the accuracy budget.
//!
//! Everything is stored as a dimensionless fractional frequency. The `1e-16`
//! reporting unit only appears when a [`Budget`] is rendered to a
//! [`BudgetReport`] or a text table.

use std::collections::HashSet;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{hypot_all, Real};

/// Reporting unit of budget tables.
pub const REPORT_UNIT: f64 = 1e-16;

/// Sanity bound on any systematic shift handled here.
pub const MAX_FRACTIONAL_SHIFT: f64 = 1e-9;

/// Signed fractional frequency offset Δf/f0.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionalShift<T>(T);

impl<T: Real> FractionalShift<T> {
    pub fn new(value: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::invalid(format!("fractional shift {value} is not finite")));
        }
        if value.abs() >= T::lit(MAX_FRACTIONAL_SHIFT) {
            return Err(Error::OutOfRange(format!(
                "fractional shift {value:e} exceeds the {MAX_FRACTIONAL_SHIFT:e} sanity bound"
            )));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    /// Builds a shift from a value expressed in units of 1e-16.
    pub fn from_1e16(value: T) -> Result<Self> {
        Self::new(value * T::lit(REPORT_UNIT))
    }

    pub fn from_hz(offset_hz: T) -> Result<Self> {
        Self::new(offset_hz / T::clock_frequency())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    #[inline]
    pub fn in_1e16(self) -> T {
        self.0 / T::lit(REPORT_UNIT)
    }

    pub fn abs(self) -> Self {
        Self(self.0.abs())
    }
}

impl<T: Real> Add for FractionalShift<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for FractionalShift<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for FractionalShift<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl<T: Real> Sum for FractionalShift<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        Self(iter.map(|s| s.0).sum())
    }
}

impl<T: Real> fmt::Display for FractionalShift<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0.to_f64_lossy())
    }
}

pub(crate) fn check_uncertainty<T: Real>(what: &str, u: T) -> Result<T> {
    if !u.is_finite() || u < T::zero() {
        return Err(Error::invalid(format!(
            "{what} must be finite and non-negative, got {u}"
        )));
    }
    Ok(u)
}

/// Root-sum-square of independent uncertainties. Empty input gives zero.
pub fn rss_combine<T: Real>(values: &[T]) -> Result<T> {
    for (i, v) in values.iter().enumerate() {
        check_uncertainty(&format!("uncertainty #{i}"), *v)?;
    }
    Ok(hypot_all(values.iter().copied()))
}

/// One row of an accuracy budget.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyEntry<T> {
    pub name: String,
    pub bias: FractionalShift<T>,
    pub u_b: T,
    /// Decimal places used when the bias is rendered in 1e-16 units.
    pub bias_decimals: u8,
    /// Decimal places used when the uncertainty is rendered in 1e-16 units.
    pub u_decimals: u8,
    /// Table footnote attached to this row (text table only).
    pub footnote: Option<String>,
}

impl<T: Real> UncertaintyEntry<T> {
    pub fn new(name: impl Into<String>, bias: FractionalShift<T>, u_b: T) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::invalid("budget entry name must be non-empty"));
        }
        let u_b = check_uncertainty(&format!("u_b of '{name}'"), u_b)?;
        Ok(Self {
            name,
            bias,
            u_b,
            bias_decimals: 1,
            u_decimals: 1,
            footnote: None,
        })
    }

    /// Convenience constructor taking both values in 1e-16 units.
    pub fn from_1e16(name: impl Into<String>, bias_1e16: T, u_b_1e16: T) -> Result<Self> {
        Self::new(
            name,
            FractionalShift::from_1e16(bias_1e16)?,
            u_b_1e16 * T::lit(REPORT_UNIT),
        )
    }

    pub fn with_decimals(mut self, bias_decimals: u8, u_decimals: u8) -> Self {
        self.bias_decimals = bias_decimals;
        self.u_decimals = u_decimals;
        self
    }

    pub fn with_footnote(mut self, note: impl Into<String>) -> Self {
        self.footnote = Some(note.into());
        self
    }
}

/// Ordered accuracy budget with its signed-sum bias and RSS uncertainty.
#[derive(Clone, Debug, PartialEq)]
pub struct Budget<T> {
    entries: Vec<UncertaintyEntry<T>>,
    total_bias: FractionalShift<T>,
    total_u_b: T,
}

impl<T: Real> Budget<T> {
    pub fn entries(&self) -> &[UncertaintyEntry<T>] {
        &self.entries
    }

    pub fn total_bias(&self) -> FractionalShift<T> {
        self.total_bias
    }

    pub fn total_u_b(&self) -> T {
        self.total_u_b
    }

    pub fn entry(&self, name: &str) -> Option<&UncertaintyEntry<T>> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sums biases and root-sum-squares uncertainties, preserving entry order.
pub fn assemble_budget<T: Real>(entries: Vec<UncertaintyEntry<T>>) -> Result<Budget<T>> {
    let mut seen = HashSet::new();
    for e in &entries {
        if !seen.insert(e.name.as_str()) {
            return Err(Error::invalid(format!("duplicate budget entry '{}'", e.name)));
        }
    }
    let total_bias = FractionalShift::new(entries.iter().map(|e| e.bias.value()).sum())?;
    let us: Vec<T> = entries.iter().map(|e| e.u_b).collect();
    let total_u_b = rss_combine(&us)?;
    Ok(Budget {
        entries,
        total_bias,
        total_u_b,
    })
}

/// Rounds `x` to `decimals` places, normalising negative zero.
pub fn round_to(x: f64, decimals: u8) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale + 0.0
}

/// Fewest decimal places (at least one) that represent `x` exactly.
fn infer_decimals(x: f64) -> u8 {
    (1..=6).find(|&d| round_to(x, d) == x).unwrap_or(6)
}

/// JSON form of a budget, values in units of 1e-16.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub entries: Vec<ReportEntry>,
    pub total_bias_1e16: f64,
    pub total_u_b_1e16: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub bias_1e16: f64,
    pub u_b_1e16: f64,
}

/// Decimal places of the Total row.
pub const TOTAL_DECIMALS: u8 = 1;

impl<T: Real> Budget<T> {
    /// Rendered report. Entry values are rounded to their declared precision;
    /// totals are rounded from the unrounded sums.
    pub fn to_report(&self) -> BudgetReport {
        BudgetReport {
            entries: self
                .entries
                .iter()
                .map(|e| ReportEntry {
                    name: e.name.clone(),
                    bias_1e16: round_to(e.bias.in_1e16().to_f64_lossy(), e.bias_decimals),
                    u_b_1e16: round_to((e.u_b / T::lit(REPORT_UNIT)).to_f64_lossy(), e.u_decimals),
                })
                .collect(),
            total_bias_1e16: round_to(self.total_bias.in_1e16().to_f64_lossy(), TOTAL_DECIMALS),
            total_u_b_1e16: round_to((self.total_u_b / T::lit(REPORT_UNIT)).to_f64_lossy(), TOTAL_DECIMALS),
        }
    }
}

impl Budget<f64> {
    /// Rebuilds a budget from a report. Decimal places are inferred from the
    /// rendered values; the stated totals must agree with the recomputed ones
    /// to within the entry rounding.
    pub fn from_report(report: &BudgetReport) -> Result<Self> {
        let entries = report
            .entries
            .iter()
            .map(|r| {
                Ok(UncertaintyEntry::from_1e16(r.name.clone(), r.bias_1e16, r.u_b_1e16)?
                    .with_decimals(infer_decimals(r.bias_1e16), infer_decimals(r.u_b_1e16)))
            })
            .collect::<Result<Vec<_>>>()?;
        let budget = assemble_budget(entries)?;
        let n = report.entries.len() as f64;
        // each rendered entry may be off by half a unit in its last place
        let slack = 0.05 + 0.05 * n;
        let db = (budget.total_bias.in_1e16() - report.total_bias_1e16).abs();
        let du = (budget.total_u_b / REPORT_UNIT - report.total_u_b_1e16).abs();
        if db > slack || du > slack {
            return Err(Error::invalid(format!(
                "report totals ({}, {}) inconsistent with its entries ({:.3}, {:.3})",
                report.total_bias_1e16,
                report.total_u_b_1e16,
                budget.total_bias.in_1e16(),
                budget.total_u_b / REPORT_UNIT
            )));
        }
        Ok(budget)
    }
}

impl BudgetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<budget report>".into(),
            message: e.to_string(),
        })
    }
}

/// Output flavour for [`render_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    TextTable,
}

pub fn render_report<T: Real>(budget: &Budget<T>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => budget.to_report().to_json(),
        ReportFormat::TextTable => render_text_table(budget),
    }
}

fn fmt_fixed(x: f64, decimals: u8) -> String {
    format!("{:.*}", decimals as usize, round_to(x, decimals))
}

/// Three-column table: physical effect, bias and uncertainty in 1e-16.
pub fn render_text_table<T: Real>(budget: &Budget<T>) -> String {
    let report = budget.to_report();
    let mut notes: Vec<&str> = Vec::new();
    for e in budget.entries() {
        if let Some(n) = e.footnote.as_deref() {
            if !notes.contains(&n) {
                notes.push(n);
            }
        }
    }
    let marker = |note: &str| -> String {
        let i = notes.iter().position(|n| *n == note).unwrap_or(0);
        ((b'a' + (i % 26) as u8) as char).to_string()
    };

    let mut rows: Vec<(String, String, String)> = Vec::new();
    for (e, r) in budget.entries().iter().zip(&report.entries) {
        let mut bias = fmt_fixed(r.bias_1e16, e.bias_decimals);
        if let Some(n) = e.footnote.as_deref() {
            bias.push(' ');
            bias.push_str(&marker(n));
        }
        rows.push((e.name.clone(), bias, fmt_fixed(r.u_b_1e16, e.u_decimals)));
    }
    if !budget.is_empty() {
        let mut bias = fmt_fixed(report.total_bias_1e16, TOTAL_DECIMALS);
        if !notes.is_empty() {
            bias.push(' ');
            bias.push_str(
                &(0..notes.len())
                    .map(|i| ((b'a' + i as u8) as char).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        rows.push((
            "Total".to_string(),
            bias,
            fmt_fixed(report.total_u_b_1e16, TOTAL_DECIMALS),
        ));
    }

    let header = ("Physical effect", "Bias / 1e-16", "Uncertainty / 1e-16");
    let w0 = rows
        .iter()
        .map(|r| r.0.len())
        .chain([header.0.len()])
        .max()
        .unwrap_or(0);
    let w1 = rows
        .iter()
        .map(|r| r.1.len())
        .chain([header.1.len()])
        .max()
        .unwrap_or(0);
    let w2 = rows
        .iter()
        .map(|r| r.2.len())
        .chain([header.2.len()])
        .max()
        .unwrap_or(0);

    let mut out = format!("{:<w0$}  {:>w1$}  {:>w2$}\n", header.0, header.1, header.2);
    for (name, bias, u) in &rows {
        out.push_str(&format!("{name:<w0$}  {bias:>w1$}  {u:>w2$}\n"));
    }
    for (i, n) in notes.iter().enumerate() {
        out.push_str(&format!("{} {}\n", (b'a' + i as u8) as char, n));
    }
    out
}

/// Row names used by the fountain accuracy budget.
pub mod names {
    pub const ZEEMAN: &str = "Second-order Zeeman";
    pub const COLD_COLLISIONS: &str = "Cold collisions";
    pub const SWITCH: &str = "Microwave interferometric switch";
    pub const LEAKAGE: &str = "Microwave leakage";
    pub const DCP: &str = "DCP";
    pub const SPECTRAL_IMPURITIES: &str = "Microwave spectral impurities";
    pub const BBR: &str = "Blackbody radiation";
    pub const GRAVITY: &str = "Gravitational red shift";
    pub const LIGHT_SHIFT: &str = "Light shift";
    pub const MAJORANA: &str = "Majorana transition";
    pub const PULLING: &str = "Rabi and Ramsey pulling";
    pub const CAVITY_PULLING: &str = "Cavity pulling";
    pub const BACKGROUND_GAS: &str = "Collision with background gases";
}

pub const LOW_DENSITY_NOTE: &str = "The collisional shift is calculated at low density.";

/// Reference accuracy budget of the operating fountain, values in 1e-16.
pub fn reference_budget() -> Vec<UncertaintyEntry<f64>> {
    use names::*;
    let rows: [(&str, f64, f64, u8); 13] = [
        (ZEEMAN, 728.8, 0.7, 1),
        (COLD_COLLISIONS, -22.0, 1.7, 1),
        (SWITCH, 0.0, 1.0, 1),
        (LEAKAGE, 0.0, 0.1, 1),
        (DCP, 0.0, 0.87, 2),
        (SPECTRAL_IMPURITIES, 0.0, 0.1, 1),
        (BBR, -165.9, 0.5, 1),
        (GRAVITY, 86.0, 0.2, 1),
        (LIGHT_SHIFT, 0.0, 0.01, 2),
        (MAJORANA, 0.0, 0.1, 1),
        (PULLING, 0.0, 0.1, 1),
        (CAVITY_PULLING, 0.0, 0.02, 2),
        (BACKGROUND_GAS, 0.0, 0.1, 1),
    ];
    rows.iter()
        .map(|&(name, b, u, ud)| {
            let e = UncertaintyEntry::from_1e16(name, b, u)
                .expect("table values are valid")
                .with_decimals(1, ud);
            if name == COLD_COLLISIONS {
                e.with_footnote(LOW_DENSITY_NOTE)
            } else {
                e
            }
        })
        .collect()
}
