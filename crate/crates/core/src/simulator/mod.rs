//! Synthetic fountain data with known injected shifts.
//!
//! Every generator draws from ChaCha8 streams keyed by `(seed, domain, index)`,
//! so outputs are bit-identical for a given config whatever the thread count.

mod generate;

pub use generate::{
    default_scan_heights, simulate_campaign, simulate_fringe_track, simulate_launch_scan, simulate_run,
    simulate_temperature_log, simulate_tilt_scan, simulate_tof, SyntheticCampaign, SyntheticDataset, Truth,
    DEFAULT_TILT_ANGLES_MRAD,
};

use serde::{Deserialize, Serialize};

use crate::dcp::{RamseyPulse, TiltAxis};
use crate::error::{Error, Result};
use crate::interrogation::InterrogationConfig;
use crate::zeeman::{FieldMap, Kinematics};

/// Injected phase gradient and optimum for one tilt axis and pulse area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltTruth {
    pub axis: TiltAxis,
    pub pulse: RamseyPulse,
    /// Fractional frequency difference per mrad.
    pub gradient_per_mrad: f64,
    pub theta_opt_mrad: f64,
    /// Point-to-point scatter of the scan, fractional.
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FountainConfig {
    /// Vertical launch velocity, m/s.
    pub v_launch: f64,
    /// Local gravity, m/s².
    pub g: f64,
    /// Ramsey cavity centre above the molasses centre, m.
    pub cavity_height: f64,
    /// Length of the cavity passage, m.
    pub cavity_length: f64,
    /// Fountain cycle, s.
    pub cycle_s: f64,
    pub mjd_start: f64,
    /// White-FM coefficients per density, referred to time spent at that density.
    pub a_h: f64,
    pub a_l: f64,
    /// High/low atom-number ratio.
    pub k: f64,
    /// Mean detected atom number at low density.
    pub n_low: f64,
    /// Relative cycle-to-cycle atom-number fluctuation.
    pub atom_fluct: f64,
    /// Injected collisional shift at the nominal low density.
    pub collision_coeff: f64,
    /// Reference-maser offset from the true zero-density frequency.
    pub maser_offset: f64,
    /// Sum of all other (non-collisional) biases carried by y.
    pub other_bias: f64,
    pub true_field_map: FieldMap<f64>,
    /// White noise on each launch-scan fringe, Hz.
    pub fringe_noise_hz: f64,
    /// Peak-to-peak slow drift of the mean field over a fringe track, nT.
    pub field_drift_nt: f64,
    pub tilt_truth: Vec<TiltTruth>,
    /// 1σ error of each tilt setting, mrad.
    pub tilt_adjustment_mrad: f64,
    /// 1σ duration of the TOF signal, s.
    pub cloud_sigma: f64,
    /// Relative TOF width change at high density.
    pub tof_distortion: f64,
    pub tof_samples: usize,
    pub temperature_k: f64,
    pub temperature_gradient_k: f64,
    pub temperature_swing_k: f64,
    pub seed: u64,
}

/// Default C-field profile: 125 nT with sub-nT structure along the flight tube.
pub fn nominal_field_map() -> FieldMap<f64> {
    FieldMap::from_fn(0.0, 1000.0, 201, |z: f64| {
        125.2 + 0.2 * (-((z - 700.0) / 60.0).powi(2)).exp() - 0.15 * (-((z - 600.0) / 40.0).powi(2)).exp()
            + 0.05 * (z / 45.0).sin()
            + 0.6 * (-(z / 150.0).powi(2)).exp()
    })
    .expect("nominal map is valid")
}

/// Tilt sensitivities and optima of the reference scans.
pub fn nominal_tilt_truth() -> Vec<TiltTruth> {
    let t = |axis, pulse, gradient_per_mrad, theta_opt_mrad, noise| TiltTruth {
        axis,
        pulse,
        gradient_per_mrad,
        theta_opt_mrad,
        noise,
    };
    vec![
        t(TiltAxis::X, RamseyPulse::HalfPi, 2.20e-15, -0.03, 8.7e-16),
        t(TiltAxis::X, RamseyPulse::ThreeHalfPi, -2.38e-15, 0.06, 8.7e-16),
        t(TiltAxis::Y, RamseyPulse::HalfPi, 0.78e-15, -0.11, 1.0e-15),
        t(TiltAxis::Y, RamseyPulse::ThreeHalfPi, -0.67e-15, 0.27, 1.0e-15),
    ]
}

impl Default for FountainConfig {
    fn default() -> Self {
        Self {
            v_launch: 4.1,
            g: 9.801,
            cavity_height: 0.532,
            cavity_length: 0.02862,
            cycle_s: 1.3,
            mjd_start: 60_000.0,
            a_h: 1.0e-13,
            a_l: 1.4e-13,
            k: 2.3,
            n_low: 1.0e6,
            atom_fluct: 0.04,
            collision_coeff: -2.2e-15,
            maser_offset: 3.0e-14,
            other_bias: 0.0,
            true_field_map: nominal_field_map(),
            fringe_noise_hz: 0.0,
            field_drift_nt: 0.4 / 7.0083,
            tilt_truth: nominal_tilt_truth(),
            tilt_adjustment_mrad: 0.05,
            cloud_sigma: 0.012,
            tof_distortion: 0.0,
            tof_samples: 601,
            temperature_k: 296.78,
            temperature_gradient_k: 0.03,
            temperature_swing_k: 0.1,
            seed: 1,
        }
    }
}

impl FountainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be finite and > 0, got {v}")))
            }
        };
        pos(self.v_launch, "launch velocity")?;
        pos(self.g, "gravity")?;
        pos(self.cavity_height, "cavity height")?;
        pos(self.cavity_length, "cavity length")?;
        pos(self.cycle_s, "cycle time")?;
        pos(self.n_low, "low-density atom number")?;
        pos(self.cloud_sigma, "TOF width")?;
        if self.v_launch.powi(2) <= 2.0 * self.g * self.cavity_height {
            return Err(Error::invalid("atoms launched at this velocity never reach the cavity"));
        }
        if !(self.k > 1.0) {
            return Err(Error::invalid(format!("density ratio k = {} must be > 1", self.k)));
        }
        for (v, what) in [
            (self.a_h, "A_H"),
            (self.a_l, "A_L"),
            (self.atom_fluct, "atom-number fluctuation"),
            (self.fringe_noise_hz, "fringe noise"),
            (self.field_drift_nt, "field drift"),
            (self.tilt_adjustment_mrad, "tilt adjustment error"),
            (self.temperature_gradient_k, "temperature gradient"),
            (self.temperature_swing_k, "temperature swing"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{what} must be >= 0")));
            }
        }
        if !(self.tof_distortion > -1.0) {
            return Err(Error::invalid("TOF distortion must be > -1"));
        }
        if self.tof_samples < 3 {
            return Err(Error::invalid("TOF trace needs at least three samples"));
        }
        FieldMap::new(self.true_field_map.z_mm().to_vec(), self.true_field_map.b_nt().to_vec())?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn kinematics(&self) -> Kinematics<f64> {
        Kinematics::new(self.g, self.cavity_height * 1000.0)
    }

    /// Interrogation with optimal π/2 pulses over the derived timing.
    pub fn interrogation(&self) -> Result<InterrogationConfig<f64>> {
        let t = ballistic_timing(self)?;
        InterrogationConfig::from_pulse_area(std::f64::consts::FRAC_PI_2, t.tau_in_s, t.t_r_s)
    }
}

/// Vertical free flight from the molasses centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub v_launch: f64,
    pub g: f64,
}

impl Trajectory {
    pub fn height_at(&self, t: f64) -> f64 {
        self.v_launch * t - 0.5 * self.g * t * t
    }

    pub fn velocity_at(&self, t: f64) -> f64 {
        self.v_launch - self.g * t
    }

    pub fn apogee(&self) -> f64 {
        self.v_launch * self.v_launch / (2.0 * self.g)
    }

    /// Time spent above height `h`, s.
    pub fn time_above(&self, h: f64) -> f64 {
        let d = self.apogee() - h;
        if d <= 0.0 {
            0.0
        } else {
            2.0 * (2.0 * d / self.g).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallisticTiming {
    pub apogee_m: f64,
    pub t_r_s: f64,
    /// Speed through the cavity, m/s.
    pub v_cavity: f64,
    pub tau_in_s: f64,
    pub trajectory: Trajectory,
}

pub fn ballistic_timing(config: &FountainConfig) -> Result<BallisticTiming> {
    if !(config.g > 0.0 && config.v_launch > 0.0) {
        return Err(Error::invalid("launch velocity and gravity must be > 0"));
    }
    let traj = Trajectory {
        v_launch: config.v_launch,
        g: config.g,
    };
    let apogee = traj.apogee();
    if config.cavity_height > apogee {
        return Err(Error::invalid(format!(
            "cavity at {} m lies above the {apogee} m apogee",
            config.cavity_height
        )));
    }
    let v_cavity = (config.v_launch.powi(2) - 2.0 * config.g * config.cavity_height)
        .max(0.0)
        .sqrt();
    let tau_in_s = if v_cavity > 0.0 {
        config.cavity_length / v_cavity
    } else {
        f64::INFINITY
    };
    Ok(BallisticTiming {
        apogee_m: apogee,
        t_r_s: traj.time_above(config.cavity_height),
        v_cavity,
        tau_in_s,
        trajectory: traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_nominal() {
        let t = ballistic_timing(&FountainConfig::default()).unwrap();
        assert!((t.apogee_m - 0.857).abs() < 0.001, "{}", t.apogee_m);
        assert!((t.apogee_m - 0.850).abs() / 0.850 < 0.01);
        assert!((t.t_r_s - 0.515).abs() < 0.003, "{}", t.t_r_s);
        assert!((t.tau_in_s - 0.011).abs() < 0.001, "{}", t.tau_in_s);
    }

    #[test]
    fn cavity_at_apogee() {
        let mut c = FountainConfig::default();
        c.cavity_height = c.v_launch.powi(2) / (2.0 * c.g);
        assert_eq!(ballistic_timing(&c).unwrap().t_r_s, 0.0);
        c.cavity_height += 0.01;
        assert!(ballistic_timing(&c).is_err());
        assert!(c.validate().is_err());
    }

    #[test]
    fn energy_conserved() {
        let t = Trajectory {
            v_launch: 4.1,
            g: 9.801,
        };
        for i in 0..=200 {
            let s = i as f64 * 0.004;
            let (h, v) = (t.height_at(s), t.velocity_at(s));
            let lhs = v * v + 2.0 * t.g * h;
            assert!((lhs / (4.1 * 4.1) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn config_json_round_trip() {
        let c = FountainConfig::default();
        let back = FountainConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
        let partial = FountainConfig::from_json(r#"{"k": 3.0, "seed": 9}"#).unwrap();
        assert_eq!(partial.k, 3.0);
        assert_eq!(partial.a_h, 1.0e-13);
        assert!(FountainConfig::from_json(r#"{"k": 0.5}"#).is_err());
        assert!(FountainConfig::from_json("{").is_err());
    }
}
