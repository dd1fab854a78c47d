use std::cell::RefCell;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::bloch::{propagate_pulse, BlochOptions, TwoLevelState};
use super::lineshape::{central_fringe_fwhm, rabi_probability, ramsey_unchecked, InterrogationConfig};
use super::servo::{servo_zero_with, ServoOptions};
use crate::budget::FractionalShift;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Microwave cavity of the Ramsey interrogation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams<T> {
    /// Loaded quality factor.
    pub q_c: T,
    /// Cavity resonance minus f0, Hz.
    pub delta_fc_hz: T,
    /// Resonance shift per kelvin, Hz/K.
    pub thermal_coeff_hz_per_k: T,
}

impl<T: Real> CavityParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_c > T::zero() && self.q_c.is_finite()) {
            return Err(Error::invalid(format!("cavity Q {} must be > 0", self.q_c)));
        }
        if !self.delta_fc_hz.is_finite() {
            return Err(Error::invalid("cavity detuning must be finite"));
        }
        Ok(())
    }

    /// Detuning after a temperature excursion `delta_t_k` from the tuned point.
    pub fn detuning_after(&self, delta_t_k: T) -> T {
        self.delta_fc_hz + self.thermal_coeff_hz_per_k * delta_t_k
    }
}

/// `(δf_c/f0)·(8/π²)·(Q_c/Q_at)²·bτ·cot(bτ)` with `Q_at = 2 f0 T_R`.
pub fn cavity_pulling_shift<T: Real>(
    cavity: &CavityParams<T>,
    config: &InterrogationConfig<T>,
) -> Result<FractionalShift<T>> {
    cavity.validate()?;
    config.validate()?;
    if !(config.t_r > T::zero()) {
        return Err(Error::invalid("free evolution must be > 0"));
    }
    let area = config.pulse_area();
    let n = (area / T::PI()).round();
    if n >= T::one() && (area - n * T::PI()).abs() < T::lit(1e-6) {
        return Err(Error::invalid(format!("pulse area {area} rad sits on a cot pole")));
    }
    let a_cot_a = if area == T::zero() { T::one() } else { area / area.tan() };
    let f0 = T::clock_frequency();
    let q_at = T::lit(2.0) * f0 * config.t_r;
    let pi = T::PI();
    FractionalShift::new(cavity.delta_fc_hz / f0 * T::lit(8.0) / (pi * pi) * (cavity.q_c / q_at).powi(2) * a_cot_a)
}

/// `Δφ / (2π T_R f0)`.
pub fn phase_transient_shift<T: Real>(delta_phi_rad: T, t_r: T) -> Result<FractionalShift<T>> {
    if !(t_r > T::zero()) {
        return Err(Error::invalid("free evolution must be > 0"));
    }
    if !delta_phi_rad.is_finite() {
        return Err(Error::invalid("phase difference must be finite"));
    }
    FractionalShift::new(delta_phi_rad / (T::TAU() * t_r * T::clock_frequency()))
}

/// Neighbouring-transition populations and offsets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullingScenario<T> {
    /// |3,+1⟩ population relative to the clock state.
    pub p_plus: T,
    /// |3,−1⟩ population relative to the clock state.
    pub p_minus: T,
    /// Fractional asymmetry of the Δm_F = ±1 transition probabilities.
    pub asym_delta_m1: T,
    /// Offset of the |3,±1⟩↔|4,±1⟩ lines, Hz.
    pub detuning_m1_hz: T,
    /// Offset of the Δm_F = ±1 lines, Hz.
    pub detuning_dm1_hz: T,
    /// Rabi frequency of the Δm_F = ±1 lines relative to the clock line.
    pub dm1_coupling: T,
}

impl<T: Real> PullingScenario<T> {
    /// 0.8 % populations with a 2 % imbalance, 0.7 % Δm_F asymmetry, 125 nT C-field.
    pub fn nominal() -> Self {
        let p = T::lit(0.008);
        let imb = T::lit(0.01);
        Self {
            p_plus: p * (T::one() + imb),
            p_minus: p * (T::one() - imb),
            asym_delta_m1: T::lit(0.007),
            detuning_m1_hz: T::lit(877.4),
            detuning_dm1_hz: T::lit(438.7),
            dm1_coupling: T::lit(0.01),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| (T::zero()..=T::one()).contains(&v);
        if !unit(self.p_plus) || !unit(self.p_minus) {
            return Err(Error::invalid("populations must lie in [0, 1]"));
        }
        if !(self.asym_delta_m1.abs() <= T::one()) {
            return Err(Error::invalid("asymmetry must lie in [-1, 1]"));
        }
        if !(self.detuning_m1_hz > T::zero() && self.detuning_dm1_hz > T::zero()) {
            return Err(Error::invalid("line offsets must be > 0"));
        }
        if !(self.dm1_coupling >= T::zero() && self.dm1_coupling.is_finite()) {
            return Err(Error::invalid("Δm_F = ±1 coupling must be >= 0"));
        }
        Ok(())
    }
}

/// Detection signal of the clock fringe plus the neighbouring lines.
pub fn pulling_signal<T: Real>(detuning_hz: T, s: &PullingScenario<T>, config: &InterrogationConfig<T>) -> T {
    let two = T::lit(2.0);
    // far off resonance the Ramsey fringes wash out over the velocity spread, leaving 2p(1-p)
    let pedestal = |d: T| {
        let p = rabi_probability(d, config.b, config.tau_in).unwrap_or(T::zero());
        two * p * (T::one() - p)
    };
    let weak = config.with_b(config.b * s.dm1_coupling);
    ramsey_unchecked(detuning_hz, config)
        + s.p_plus * pedestal(detuning_hz - s.detuning_m1_hz)
        + s.p_minus * pedestal(detuning_hz + s.detuning_m1_hz)
        + (T::one() + s.asym_delta_m1) * ramsey_unchecked(detuning_hz - s.detuning_dm1_hz, &weak)
        + (T::one() - s.asym_delta_m1) * ramsey_unchecked(detuning_hz + s.detuning_dm1_hz, &weak)
}

/// Rabi plus Ramsey pulling of the locked frequency.
pub fn pulling_shift<T: Real>(
    scenario: &PullingScenario<T>,
    config: &InterrogationConfig<T>,
) -> Result<FractionalShift<T>> {
    scenario.validate()?;
    config.validate()?;
    let m = central_fringe_fwhm(config)? / T::lit(2.0);
    let z = servo_zero_with(|d| pulling_signal(d, scenario, config), &ServoOptions::new(m))?;
    FractionalShift::from_hz(z)
}

/// A pair of spurs at ±offset around the carrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandSpec<T> {
    pub offset_hz: T,
    pub power_upper_dbc: T,
    pub power_lower_dbc: T,
}

impl<T: Real> SidebandSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset_hz > T::zero() && self.offset_hz.is_finite()) {
            return Err(Error::invalid("sideband offset must be > 0"));
        }
        if !(self.power_upper_dbc <= T::zero() && self.power_lower_dbc <= T::zero()) {
            return Err(Error::invalid("sideband powers must be <= 0 dBc"));
        }
        Ok(())
    }

    pub fn swapped(self) -> Self {
        Self {
            power_upper_dbc: self.power_lower_dbc,
            power_lower_dbc: self.power_upper_dbc,
            ..self
        }
    }

    fn amplitudes(&self) -> (T, T) {
        let amp = |db: T| T::lit(10.0).powf(db / T::lit(20.0));
        (amp(self.power_upper_dbc), amp(self.power_lower_dbc))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidebandOptions {
    /// Spur phases averaged over (the spurs are not phase locked to the cycle).
    pub phase_samples: usize,
    /// RK4 steps per period of the fastest spur.
    pub steps_per_period: usize,
    /// Servo modulation depth; `None` uses half the fringe width.
    pub modulation_depth_hz: Option<f64>,
    #[serde(skip)]
    pub bloch: BlochOptions,
}

impl Default for SidebandOptions {
    fn default() -> Self {
        Self {
            phase_samples: 8,
            steps_per_period: 1000,
            modulation_depth_hz: None,
            bloch: BlochOptions::default(),
        }
    }
}

fn pulse_steps<T: Real>(
    sidebands: &[SidebandSpec<T>],
    config: &InterrogationConfig<T>,
    opts: &SidebandOptions,
) -> usize {
    let f_max = sidebands.iter().map(|s| s.offset_hz.to_f64_lossy()).fold(0.0, f64::max);
    let mut h = opts.bloch.max_step_s;
    if f_max > 0.0 {
        h = h.min(1.0 / (f_max * opts.steps_per_period.max(1) as f64));
    }
    (config.tau_in.to_f64_lossy() / h).ceil().max(1.0) as usize
}

/// Phase-averaged Ramsey probability under a carrier with spurs.
pub fn sideband_lineshape<T: Real>(
    detuning_hz: T,
    sidebands: &[SidebandSpec<T>],
    config: &InterrogationConfig<T>,
    opts: &SidebandOptions,
) -> Result<T> {
    config.validate()?;
    for s in sidebands {
        s.validate()?;
    }
    let samples = opts.phase_samples.max(1);
    let steps = pulse_steps(sidebands, config, opts);
    let spurs: Vec<(T, T, T)> = sidebands
        .iter()
        .map(|s| {
            let (u, l) = s.amplitudes();
            (T::TAU() * s.offset_hz, u, l)
        })
        .collect();
    let delta = T::TAU() * detuning_hz;
    let tau = config.tau_in;
    let t2 = tau + config.t_r;
    let mut sum = T::zero();
    for j in 0..samples {
        let phi = T::TAU() * T::lit(j as f64) / T::lit(samples as f64);
        let drive = |t: T| {
            let mut g = Complex::new(T::one(), T::zero());
            for &(w, u, l) in &spurs {
                let rot = Complex::new(T::zero(), -(w * t + phi)).exp();
                g = g + rot * u + rot.conj() * l;
            }
            g * config.b
        };
        let s = propagate_pulse(
            TwoLevelState::ground(),
            drive,
            delta,
            T::zero(),
            tau,
            steps,
            &opts.bloch,
        )?;
        let s = s.free_evolve(delta, config.t_r);
        let s = propagate_pulse(s, drive, delta, t2, t2 + tau, steps, &opts.bloch)?;
        sum = sum + s.excited_population();
    }
    Ok(sum / T::lit(samples as f64))
}

/// Lock offset caused by spurs on the interrogation signal.
pub fn sideband_shift<T: Real>(
    sidebands: &[SidebandSpec<T>],
    config: &InterrogationConfig<T>,
    opts: &SidebandOptions,
) -> Result<FractionalShift<T>> {
    config.validate()?;
    for s in sidebands {
        s.validate()?;
    }
    let fwhm = central_fringe_fwhm(config)?;
    for s in sidebands {
        if s.offset_hz < T::lit(10.0) * fwhm {
            return Err(Error::invalid(format!(
                "sideband offset {} Hz is not well outside the {} Hz fringe",
                s.offset_hz, fwhm
            )));
        }
    }
    let m = match opts.modulation_depth_hz {
        Some(m) => T::lit(m),
        None => fwhm / T::lit(2.0),
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let signal = |d: T| match sideband_lineshape(d, sidebands, config, opts) {
        Ok(p) => p,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::nan()
        }
    };
    let z = servo_zero_with(signal, &ServoOptions::new(m));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    FractionalShift::from_hz(z?)
}
