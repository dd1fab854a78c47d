//! Blackbody radiation, gravitational redshift and bounded residual shifts.

use serde::{Deserialize, Serialize};

use crate::budget::{check_uncertainty, FractionalShift};
use crate::error::{Error, Result};
use crate::scalar::{hypot_all, mean, Real};

/// Coefficients of the static-polarisability BBR model
/// `β (T/T0)^4 [1 + ε (T/T0)^2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbrConstants<T> {
    pub beta: T,
    pub beta_u: T,
    pub epsilon: T,
    pub epsilon_u: T,
    pub t0: T,
}

impl<T: Real> Default for BbrConstants<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(-1.710e-14),
            beta_u: T::lit(0.006e-14),
            epsilon: T::lit(1.3e-2),
            epsilon_u: T::lit(0.1e-2),
            t0: T::lit(300.0),
        }
    }
}

/// Temperature step for the numeric derivative, kelvin.
pub const DERIVATIVE_STEP_K: f64 = 1e-3;

impl<T: Real> BbrConstants<T> {
    fn eval(&self, t: T, beta: T, epsilon: T) -> T {
        let r2 = (t / self.t0).powi(2);
        beta * r2 * r2 * (T::one() + epsilon * r2)
    }

    pub fn shift(&self, temperature_k: T) -> Result<FractionalShift<T>> {
        if !(temperature_k >= T::zero()) {
            return Err(Error::invalid(format!("temperature {temperature_k} K must be >= 0")));
        }
        FractionalShift::new(self.eval(temperature_k, self.beta, self.epsilon))
    }

    /// ∂shift/∂T by central difference.
    pub fn temperature_sensitivity(&self, temperature_k: T) -> T {
        let h = T::lit(DERIVATIVE_STEP_K);
        (self.eval(temperature_k + h, self.beta, self.epsilon) - self.eval(temperature_k - h, self.beta, self.epsilon))
            / (h + h)
    }

    pub fn uncertainty(&self, temperature_k: T, temperature_u_k: T) -> Result<BbrUncertainty<T>> {
        check_uncertainty("temperature uncertainty", temperature_u_k)?;
        if !(temperature_k >= T::zero()) {
            return Err(Error::invalid(format!("temperature {temperature_k} K must be >= 0")));
        }
        let r2 = (temperature_k / self.t0).powi(2);
        Ok(BbrUncertainty {
            temperature: (self.temperature_sensitivity(temperature_k) * temperature_u_k).abs(),
            epsilon: (self.beta * r2 * r2 * r2 * self.epsilon_u).abs(),
            beta: (r2 * r2 * (T::one() + self.epsilon * r2) * self.beta_u).abs(),
        })
    }
}

/// Contributions to the BBR uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbrUncertainty<T> {
    /// Effective-temperature uncertainty propagated through the model.
    pub temperature: T,
    /// Uncertainty of the ε (dynamic correction) coefficient.
    pub epsilon: T,
    /// Scale uncertainty of β. Reported, not part of [`BbrUncertainty::total`].
    pub beta: T,
}

impl<T: Real> BbrUncertainty<T> {
    /// Budget uncertainty: temperature and ε contributions in quadrature.
    pub fn total(&self) -> T {
        hypot_all([self.temperature, self.epsilon])
    }

    /// All three contributions including the β scale term.
    pub fn total_with_beta(&self) -> T {
        hypot_all([self.temperature, self.epsilon, self.beta])
    }
}

/// BBR fractional shift with the default coefficients.
pub fn bbr_shift<T: Real>(temperature_k: T) -> Result<FractionalShift<T>> {
    BbrConstants::default().shift(temperature_k)
}

/// BBR uncertainty breakdown with the default coefficients.
pub fn bbr_uncertainty<T: Real>(temperature_k: T, temperature_u_k: T) -> Result<BbrUncertainty<T>> {
    BbrConstants::default().uncertainty(temperature_k, temperature_u_k)
}

/// Gravitational redshift parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GravityParams<T> {
    /// g/c² in fractional frequency per metre.
    pub g_over_c2: T,
    /// Time-averaged height above the geoid during interrogation, m.
    pub height_m: T,
    pub height_u_m: T,
}

impl<T: Real> GravityParams<T> {
    pub fn new(height_m: T, height_u_m: T) -> Self {
        Self {
            g_over_c2: T::lit(1.09e-16),
            height_m,
            height_u_m,
        }
    }
}

pub fn gravitational_redshift<T: Real>(params: &GravityParams<T>) -> Result<(FractionalShift<T>, T)> {
    check_uncertainty("height uncertainty", params.height_u_m)?;
    Ok((
        FractionalShift::new(params.g_over_c2 * params.height_m)?,
        params.g_over_c2 * params.height_u_m,
    ))
}

/// One-sided bound from an effect measured under exaggerated conditions and
/// suppressed by a known factor in normal operation.
pub fn bounded_shift<T: Real>(measured_effect: FractionalShift<T>, suppression_factor: T) -> Result<T> {
    if !(suppression_factor >= T::one()) {
        return Err(Error::invalid(format!(
            "suppression factor {suppression_factor} must be >= 1"
        )));
    }
    Ok(measured_effect.value().abs() / suppression_factor)
}

/// Background-gas collisional shift bound from a pressure reading and a
/// fractional pressure-shift coefficient (per Pa).
pub fn background_gas_bound<T: Real>(pressure_pa: T, coefficient_per_pa: T) -> Result<T> {
    if !(pressure_pa >= T::zero()) {
        return Err(Error::invalid("pressure must be >= 0"));
    }
    let shift = FractionalShift::new(coefficient_per_pa * pressure_pa)?;
    bounded_shift(shift, T::one())
}

/// One line of the flight-tube temperature log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSample {
    pub mjd: f64,
    pub t_top_k: f64,
    pub t_bottom_k: f64,
}

/// Contributions to the effective-temperature uncertainty, kelvin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureBudget {
    pub sensor_u: f64,
    pub gradient_bound: f64,
    pub wall_to_atom_bound: f64,
    /// Lower limit on the combined uncertainty (laboratory day-to-day swing).
    pub floor: f64,
}

impl Default for TemperatureBudget {
    fn default() -> Self {
        Self {
            sensor_u: 0.05,
            gradient_bound: 0.05,
            wall_to_atom_bound: 0.1,
            floor: 0.2,
        }
    }
}

/// Effective interrogation temperature from a thermometer log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTemperature {
    pub mean_k: f64,
    pub uncertainty_k: f64,
    /// Largest observed |top − bottom| difference.
    pub max_gradient_k: f64,
    /// Peak-to-peak of the mean of both sensors over the log.
    pub peak_to_peak_k: f64,
}

/// Mean of top and bottom sensor series; uncertainty is the RSS of sensor,
/// gradient and wall-offset terms (the gradient term is the larger of the
/// configured bound and the observed difference), never below `floor`.
pub fn effective_temperature(log: &[TemperatureSample], budget: &TemperatureBudget) -> Result<EffectiveTemperature> {
    if log.is_empty() {
        return Err(Error::invalid("temperature log is empty"));
    }
    let mids: Vec<f64> = log.iter().map(|s| 0.5 * (s.t_top_k + s.t_bottom_k)).collect();
    if mids.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err(Error::invalid("temperature log contains non-physical values"));
    }
    let max_gradient_k = log.iter().map(|s| (s.t_top_k - s.t_bottom_k).abs()).fold(0.0, f64::max);
    let hi = mids.iter().cloned().fold(f64::MIN, f64::max);
    let lo = mids.iter().cloned().fold(f64::MAX, f64::min);
    let combined = hypot_all([
        budget.sensor_u,
        budget.gradient_bound.max(max_gradient_k),
        budget.wall_to_atom_bound,
    ]);
    Ok(EffectiveTemperature {
        mean_k: mean(&mids),
        uncertainty_k: combined.max(budget.floor),
        max_gradient_k,
        peak_to_peak_k: hi - lo,
    })
}
