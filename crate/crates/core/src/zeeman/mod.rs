//! C-field mapping and the second-order Zeeman shift.
//!
//! The field-sensitive |3,1⟩↔|4,1⟩ fringe measures the time-averaged field
//! above the Ramsey cavity for one launch height. Scanning the launch height
//! and deconvolving the ballistic dwell times recovers B(z) (see
//! [`reconstruct_field_map`]); the routine-height fringe gives ⟨B⟩ for the
//! quadratic shift.

mod field_map;
mod reconstruct;

pub use field_map::{time_averaged_field, trajectory_field_stats, FieldMap, Kinematics, TrajectoryStats};
pub use reconstruct::{reconstruct_field_map, FieldReconstruction, LaunchScan, ReconstructionOptions, ScanPoint};

use serde::{Deserialize, Serialize};

use crate::budget::{check_uncertainty, FractionalShift};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Field sensitivities of the Cs hyperfine lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanConstants<T> {
    /// First-order shift of |3,1⟩↔|4,1⟩, Hz/nT.
    pub k1_hz_per_nt: T,
    /// Second-order clock-transition coefficient, Hz/nT².
    pub k2_hz_per_nt2: T,
}

impl<T: Real> Default for ZeemanConstants<T> {
    fn default() -> Self {
        Self {
            k1_hz_per_nt: T::lit(7.0083),
            // (gJ - gI)² μB² / (2 h² f0) = 427.45 Hz/G²
            k2_hz_per_nt2: T::lit(4.2745e-8),
        }
    }
}

impl<T: Real> ZeemanConstants<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1_hz_per_nt > T::zero() && self.k2_hz_per_nt2 > T::zero()) {
            return Err(Error::invalid("Zeeman constants must be positive"));
        }
        Ok(())
    }

    /// Time-averaged field from the |3,1⟩↔|4,1⟩ fringe offset above f0.
    pub fn field_from_fringe(&self, fringe_offset_hz: T) -> Result<T> {
        if !(fringe_offset_hz >= T::zero()) {
            return Err(Error::invalid(format!(
                "fringe offset {fringe_offset_hz} Hz must be >= 0"
            )));
        }
        Ok(fringe_offset_hz / self.k1_hz_per_nt)
    }

    pub fn fringe_from_field(&self, field_nt: T) -> T {
        field_nt * self.k1_hz_per_nt
    }

    pub fn shift(&self, mean_field_nt: T) -> Result<FractionalShift<T>> {
        if !(mean_field_nt >= T::zero()) {
            return Err(Error::invalid(format!("mean field {mean_field_nt} nT must be >= 0")));
        }
        FractionalShift::new(self.k2_hz_per_nt2 * mean_field_nt * mean_field_nt / T::clock_frequency())
    }

    /// Combines the temporal drift of ⟨B⟩ and the along-trajectory spread σ.
    pub fn uncertainty(&self, mean_field_nt: T, sigma_inhom_nt: T, temporal_db_nt: T) -> Result<T> {
        check_uncertainty("mean field", mean_field_nt)?;
        check_uncertainty("inhomogeneity", sigma_inhom_nt)?;
        check_uncertainty("temporal variation", temporal_db_nt)?;
        let two = T::lit(2.0);
        let a = two * mean_field_nt * temporal_db_nt;
        let b = sigma_inhom_nt * sigma_inhom_nt;
        Ok(self.k2_hz_per_nt2 / T::clock_frequency() * a.hypot(b))
    }

    /// Peak-to-peak excursion of a tracked fringe series converted to field.
    pub fn temporal_variation(&self, fringe_track_hz: &[T]) -> Result<T> {
        if fringe_track_hz.is_empty() {
            return Err(Error::invalid("fringe tracking series is empty"));
        }
        let hi = fringe_track_hz.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = fringe_track_hz.iter().copied().fold(T::infinity(), T::min);
        Ok((hi - lo) / self.k1_hz_per_nt)
    }
}

pub fn field_from_fringe<T: Real>(fringe_offset_hz: T) -> Result<T> {
    ZeemanConstants::default().field_from_fringe(fringe_offset_hz)
}

pub fn zeeman_shift<T: Real>(mean_field_nt: T) -> Result<FractionalShift<T>> {
    ZeemanConstants::default().shift(mean_field_nt)
}

pub fn zeeman_uncertainty<T: Real>(mean_field_nt: T, sigma_inhom_nt: T, temporal_db_nt: T) -> Result<T> {
    ZeemanConstants::default().uncertainty(mean_field_nt, sigma_inhom_nt, temporal_db_nt)
}

/// Outcome of a Zeeman evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanResult<T> {
    pub mean_b_nt: T,
    pub sigma_inhom_nt: T,
    pub temporal_db_nt: T,
    pub bias: FractionalShift<T>,
    pub u_b: T,
}

pub fn evaluate_zeeman<T: Real>(
    constants: &ZeemanConstants<T>,
    mean_b_nt: T,
    sigma_inhom_nt: T,
    temporal_db_nt: T,
) -> Result<ZeemanResult<T>> {
    Ok(ZeemanResult {
        mean_b_nt,
        sigma_inhom_nt,
        temporal_db_nt,
        bias: constants.shift(mean_b_nt)?,
        u_b: constants.uncertainty(mean_b_nt, sigma_inhom_nt, temporal_db_nt)?,
    })
}
