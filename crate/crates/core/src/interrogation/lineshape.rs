use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pulse timing of one fountain interrogation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterrogationConfig<T> {
    /// Rabi angular frequency, rad/s.
    pub b: T,
    /// Single-passage pulse length, s.
    pub tau_in: T,
    /// Free-evolution time between the passages, s.
    pub t_r: T,
}

impl<T: Real> InterrogationConfig<T> {
    pub fn new(b: T, tau_in: T, t_r: T) -> Result<Self> {
        let c = Self { b, tau_in, t_r };
        c.validate()?;
        Ok(c)
    }

    /// Config whose pulse area `b·tau_in` equals `pulse_area`.
    pub fn from_pulse_area(pulse_area: T, tau_in: T, t_r: T) -> Result<Self> {
        if !(tau_in > T::zero()) {
            return Err(Error::invalid("pulse duration must be > 0"));
        }
        Self::new(pulse_area / tau_in, tau_in, t_r)
    }

    /// τ = 11 ms, T_R = 515 ms, optimal π/2 pulses.
    pub fn nominal() -> Self {
        let tau = T::lit(0.011);
        Self {
            b: T::FRAC_PI_2() / tau,
            tau_in: tau,
            t_r: T::lit(0.515),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b >= T::zero() && self.b.is_finite()) {
            return Err(Error::invalid(format!(
                "Rabi frequency {} must be finite and >= 0",
                self.b
            )));
        }
        if !(self.tau_in > T::zero() && self.tau_in.is_finite()) {
            return Err(Error::invalid(format!("pulse duration {} must be > 0", self.tau_in)));
        }
        if !(self.t_r >= T::zero() && self.t_r.is_finite()) {
            return Err(Error::invalid(format!("free evolution {} must be >= 0", self.t_r)));
        }
        Ok(())
    }

    pub fn pulse_area(&self) -> T {
        self.b * self.tau_in
    }

    pub fn with_b(self, b: T) -> Self {
        Self { b, ..self }
    }
}

/// Single-pulse transition probability.
pub fn rabi_probability<T: Real>(detuning_hz: T, b: T, tau: T) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(Error::invalid("pulse duration must be > 0"));
    }
    let delta = T::TAU() * detuning_hz;
    let omega = b.hypot(delta);
    if omega == T::zero() {
        return Ok(T::zero());
    }
    let s = (omega * tau / T::lit(2.0)).sin();
    Ok((b / omega).powi(2) * s * s)
}

/// Two-pulse Ramsey transition probability (rectangular pulses, square cavity profile).
pub fn ramsey_probability<T: Real>(detuning_hz: T, config: &InterrogationConfig<T>) -> Result<T> {
    config.validate()?;
    Ok(ramsey_unchecked(detuning_hz, config))
}

pub(crate) fn ramsey_unchecked<T: Real>(detuning_hz: T, c: &InterrogationConfig<T>) -> T {
    let two = T::lit(2.0);
    let delta = T::TAU() * detuning_hz;
    let omega = c.b.hypot(delta);
    if omega == T::zero() {
        return T::zero();
    }
    let half_pulse = omega * c.tau_in / two;
    let half_free = delta * c.t_r / two;
    let (sp, cp) = half_pulse.sin_cos();
    let (sf, cf) = half_free.sin_cos();
    let amp = cf * cp - (delta / omega) * sf * sp;
    let p = T::lit(4.0) * (c.b / omega).powi(2) * sp * sp * amp * amp;
    p.max(T::zero()).min(T::one())
}

/// Full width at half maximum of the central Ramsey fringe, Hz.
pub fn central_fringe_fwhm<T: Real>(config: &InterrogationConfig<T>) -> Result<T> {
    config.validate()?;
    if config.b == T::zero() {
        return Err(Error::invalid("undriven interrogation has no fringe"));
    }
    let peak = ramsey_unchecked(T::zero(), config);
    let half = peak / T::lit(2.0);
    // the first half-maximum crossing lies inside a quarter fringe period
    let t_eff = config.t_r + config.tau_in * T::lit(4.0) / T::PI();
    let mut lo = T::zero();
    let mut hi = T::lit(0.5) / t_eff;
    if ramsey_unchecked(hi, config) > half {
        return Err(Error::NoLock("central fringe has no half-maximum crossing".into()));
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if ramsey_unchecked(mid, config) > half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    Ok(lo + hi)
}

/// (max - min) / (max + min) of the central fringe.
pub fn fringe_contrast<T: Real>(config: &InterrogationConfig<T>) -> Result<T> {
    config.validate()?;
    let max = ramsey_unchecked(T::zero(), config);
    let t_eff = config.t_r + config.tau_in * T::lit(4.0) / T::PI();
    let mut lo = T::lit(0.25) / t_eff;
    let mut hi = T::lit(0.75) / t_eff;
    // golden-section search for the first minimum
    let g = T::lit(0.618_033_988_749_894_9);
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if ramsey_unchecked(a, config) < ramsey_unchecked(b, config) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let min = ramsey_unchecked((lo + hi) / T::lit(2.0), config);
    if max + min == T::zero() {
        return Ok(T::zero());
    }
    Ok((max - min) / (max + min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn nominal() -> InterrogationConfig<f64> {
        InterrogationConfig::nominal()
    }

    #[test]
    fn resonant_ideal_pulses() {
        assert!((ramsey_probability(0.0, &nominal()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn undriven() {
        let c = nominal().with_b(0.0);
        for d in [-3.0, 0.0, 0.2, 877.4] {
            assert_eq!(ramsey_probability(d, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn fwhm_nominal() {
        let w = central_fringe_fwhm(&nominal()).unwrap();
        assert!((0.88..=0.98).contains(&w), "{w}");
        assert!((w - 0.94).abs() < 0.01, "{w}");
    }

    #[test]
    fn contrast_ideal() {
        let c = fringe_contrast(&nominal()).unwrap();
        assert!(c > 0.999, "{c}");
    }

    #[test]
    fn rabi_cases() {
        let tau = 0.011;
        assert!((rabi_probability(0.0, PI / tau, tau).unwrap() - 1.0).abs() < 1e-15);
        assert!(rabi_probability(0.0, 2.0 * PI / tau, tau).unwrap() < 1e-15);
        assert!(rabi_probability(877.4, PI / 2.0 / tau, tau).unwrap() < 0.05);
        assert!(rabi_probability(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(InterrogationConfig::new(-1.0, 0.01, 0.5).is_err());
        assert!(InterrogationConfig::new(1.0, 0.0, 0.5).is_err());
        assert!(InterrogationConfig::new(1.0, 0.01, f64::NAN).is_err());
        let c = InterrogationConfig::from_pulse_area(PI / 2.0, 0.011, 0.515).unwrap();
        assert!((c.pulse_area() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn f32_lineshape() {
        let c = InterrogationConfig::<f32>::nominal();
        assert!((ramsey_probability(0.0f32, &c).unwrap() - 1.0).abs() < 1e-6);
    }
}
