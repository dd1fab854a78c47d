//! Accuracy evaluation of a caesium fountain primary frequency standard.
//!
//! The crate turns raw campaign data (interleaved-density cycles, launch-height
//! fringe scans, cavity tilt scans, thermometer logs, maser and UTC comparison
//! files) into a type-B accuracy budget and a UTC comparison report. A seeded
//! simulator produces synthetic data with known injected shifts so every
//! evaluation can be checked against ground truth.
//!
//! Numerical code is generic over [`scalar::Real`]; the aliases below fix the
//! scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod budget;
pub mod comparison;
pub mod dcp;
pub mod density;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod interrogation;
pub mod io;
pub(crate) mod linalg;
pub mod scalar;
pub mod simulator;
pub mod zeeman;

pub use budget::{assemble_budget, reference_budget, render_report, rss_combine, BudgetReport, ReportFormat};
pub use error::{Error, Result};
pub use scalar::{Real, CLOCK_FREQUENCY_HZ};

pub type FractionalShift = budget::FractionalShift<f64>;
pub type UncertaintyEntry = budget::UncertaintyEntry<f64>;
pub type Budget = budget::Budget<f64>;
pub type ZeemanConstants = zeeman::ZeemanConstants<f64>;
pub type FieldMap = zeeman::FieldMap<f64>;
pub type LaunchScan = zeeman::LaunchScan<f64>;
pub type Kinematics = zeeman::Kinematics<f64>;
pub type InterrogationConfig = interrogation::InterrogationConfig<f64>;
pub type CycleRecord = density::CycleRecord<f64>;
pub type AdevPoint = density::AdevPoint<f64>;
pub type TiltScan = dcp::TiltScan<f64>;
pub type TiltFit = dcp::TiltFit<f64>;
pub type ComparisonRecord = comparison::ComparisonRecord<f64>;
