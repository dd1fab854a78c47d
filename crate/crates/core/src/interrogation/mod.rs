//! Two-level Rabi/Ramsey interrogation: lineshapes, a numeric Bloch
//! propagator, the square-wave servo, and the microwave-related shift
//! estimators.
//!
//! Detuning is always `f_drive - f0` in Hz. A positive servo offset therefore
//! means the locked oscillator runs high, and the fractional shift is the
//! offset divided by f0.

mod bloch;
mod lineshape;
mod servo;
mod shifts;

pub use bloch::{propagate_pulse, ramsey_probability_bloch, BlochOptions, TwoLevelState};
pub use lineshape::{central_fringe_fwhm, fringe_contrast, rabi_probability, ramsey_probability, InterrogationConfig};
pub use servo::{servo_zero, servo_zero_with, ServoOptions};
pub use shifts::{
    cavity_pulling_shift, phase_transient_shift, pulling_shift, pulling_signal, sideband_lineshape, sideband_shift,
    CavityParams, PullingScenario, SidebandOptions, SidebandSpec,
};
