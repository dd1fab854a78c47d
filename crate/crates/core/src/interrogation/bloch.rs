use num_complex::Complex;

use super::lineshape::InterrogationConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ground/excited amplitudes in the frame rotating at the drive carrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelState<T> {
    pub ground: Complex<T>,
    pub excited: Complex<T>,
}

impl<T: Real> TwoLevelState<T> {
    pub fn ground() -> Self {
        Self {
            ground: Complex::new(T::one(), T::zero()),
            excited: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn excited_population(&self) -> T {
        self.excited.norm_sqr()
    }

    pub fn norm_sqr(&self) -> T {
        self.ground.norm_sqr() + self.excited.norm_sqr()
    }

    /// Exact undriven evolution for `duration` at angular detuning `delta`.
    pub fn free_evolve(self, delta: T, duration: T) -> Self {
        let phase = delta * duration / T::lit(2.0);
        Self {
            ground: self.ground * Complex::new(T::zero(), -phase).exp(),
            excited: self.excited * Complex::new(T::zero(), phase).exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochOptions {
    /// Upper bound on the RK4 step, s.
    pub max_step_s: f64,
    /// Tolerated drift of |c_g|² + |c_e|² before failing.
    pub norm_tolerance: f64,
}

impl Default for BlochOptions {
    fn default() -> Self {
        Self {
            max_step_s: 5e-6,
            norm_tolerance: 1e-6,
        }
    }
}

fn derivative<T: Real>(s: &TwoLevelState<T>, g: Complex<T>, delta: T) -> TwoLevelState<T> {
    // i ċ_g = (Δ/2) c_g + (g*/2) c_e ;  i ċ_e = (g/2) c_g − (Δ/2) c_e
    let half = T::lit(0.5);
    let mi = Complex::new(T::zero(), -T::one());
    let dg = (s.ground * delta * half + g.conj() * s.excited * half) * mi;
    let de = (g * s.ground * half - s.excited * delta * half) * mi;
    TwoLevelState {
        ground: dg,
        excited: de,
    }
}

fn axpy<T: Real>(s: &TwoLevelState<T>, k: &TwoLevelState<T>, h: T) -> TwoLevelState<T> {
    TwoLevelState {
        ground: s.ground + k.ground * h,
        excited: s.excited + k.excited * h,
    }
}

/// RK4 propagation through a pulse with complex Rabi drive `drive(t)` (rad/s)
/// from `t0` to `t1` at angular detuning `delta`.
pub fn propagate_pulse<T: Real>(
    state: TwoLevelState<T>,
    drive: impl Fn(T) -> Complex<T>,
    delta: T,
    t0: T,
    t1: T,
    steps: usize,
    opts: &BlochOptions,
) -> Result<TwoLevelState<T>> {
    let span = t1 - t0;
    let steps = steps.max(1);
    let h = span / T::lit(steps as f64);
    if !(h.to_f64_lossy() <= opts.max_step_s * (1.0 + 1e-9)) && span > T::zero() {
        return Err(Error::Numeric {
            reason: format!("step exceeds the {:e} s bound", opts.max_step_s),
            steps,
            step_s: h.to_f64_lossy(),
        });
    }
    let n0 = state.norm_sqr();
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let mut s = state;
    for k in 0..steps {
        let t = t0 + h * T::lit(k as f64);
        let g0 = drive(t);
        let gm = drive(t + h * half);
        let g1 = drive(t + h);
        let k1 = derivative(&s, g0, delta);
        let k2 = derivative(&axpy(&s, &k1, h * half), gm, delta);
        let k3 = derivative(&axpy(&s, &k2, h * half), gm, delta);
        let k4 = derivative(&axpy(&s, &k3, h), g1, delta);
        s = TwoLevelState {
            ground: s.ground + (k1.ground + (k2.ground + k3.ground) * T::lit(2.0) + k4.ground) * h * sixth,
            excited: s.excited + (k1.excited + (k2.excited + k3.excited) * T::lit(2.0) + k4.excited) * h * sixth,
        };
    }
    let drift = (s.norm_sqr() - n0).abs().to_f64_lossy();
    if !(drift <= opts.norm_tolerance) {
        return Err(Error::Numeric {
            reason: format!("norm drifted by {drift:e}"),
            steps,
            step_s: h.to_f64_lossy(),
        });
    }
    Ok(s)
}

/// Ramsey probability by direct integration, for checking the closed form.
pub fn ramsey_probability_bloch<T: Real>(
    detuning_hz: T,
    config: &InterrogationConfig<T>,
    steps_per_pulse: usize,
    opts: &BlochOptions,
) -> Result<T> {
    config.validate()?;
    let delta = T::TAU() * detuning_hz;
    let b = Complex::new(config.b, T::zero());
    let drive = |_t: T| b;
    let tau = config.tau_in;
    let s = propagate_pulse(
        TwoLevelState::ground(),
        drive,
        delta,
        T::zero(),
        tau,
        steps_per_pulse,
        opts,
    )?;
    let s = s.free_evolve(delta, config.t_r);
    let t2 = tau + config.t_r;
    let s = propagate_pulse(s, drive, delta, t2, t2 + tau, steps_per_pulse, opts)?;
    Ok(s.excited_population())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interrogation::lineshape::{rabi_probability, ramsey_probability};
    use std::f64::consts::PI;

    #[test]
    fn rabi_pulse_matches_closed_form() {
        let tau = 0.011;
        let b = PI / 2.0 / tau;
        for d in [-40.0, -1.0, 0.0, 0.3, 25.0] {
            let drive = |_t: f64| Complex::new(b, 0.0);
            let s = propagate_pulse(
                TwoLevelState::ground(),
                drive,
                2.0 * PI * d,
                0.0,
                tau,
                4000,
                &BlochOptions::default(),
            )
            .unwrap();
            let p = rabi_probability(d, b, tau).unwrap();
            assert!((s.excited_population() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn ramsey_matches_closed_form() {
        let c = InterrogationConfig::<f64>::nominal();
        for d in [-2.0, -0.47, 0.0, 0.1, 0.83, 4.5] {
            let num = ramsey_probability_bloch(d, &c, 4000, &BlochOptions::default()).unwrap();
            let exact = ramsey_probability(d, &c).unwrap();
            assert!((num - exact).abs() < 1e-9, "{d}: {num} vs {exact}");
        }
    }

    #[test]
    fn rotating_sideband_resonates_below_carrier() {
        // a drive e^{-iωt} in the carrier frame is a field at f_carrier + ω/2π
        let tau = 0.011;
        let b = PI / tau;
        let fs = 50.0;
        let w = 2.0 * PI * fs;
        let drive = |t: f64| Complex::new(0.0, -w * t).exp() * b;
        let run = |d: f64| {
            propagate_pulse(
                TwoLevelState::ground(),
                drive,
                2.0 * PI * d,
                0.0,
                tau,
                4000,
                &BlochOptions::default(),
            )
            .unwrap()
            .excited_population()
        };
        assert!((run(-fs) - 1.0).abs() < 1e-9);
        assert!(run(fs) < 0.1);
    }

    #[test]
    fn coarse_step_rejected() {
        let e = propagate_pulse(
            TwoLevelState::<f64>::ground(),
            |_t| Complex::new(1.0, 0.0),
            0.0,
            0.0,
            1.0,
            10,
            &BlochOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Numeric { steps: 10, .. }));
    }

    #[test]
    fn norm_drift_detected() {
        let opts = BlochOptions {
            max_step_s: 1.0,
            norm_tolerance: 1e-6,
        };
        let e = propagate_pulse(
            TwoLevelState::<f64>::ground(),
            |_t| Complex::new(1e3, 0.0),
            0.0,
            0.0,
            1.0,
            100,
            &opts,
        )
        .unwrap_err();
        assert!(e.is_numerical());
    }
}
