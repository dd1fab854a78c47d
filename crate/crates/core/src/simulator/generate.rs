use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FountainConfig;
use crate::dcp::{RamseyPulse, TiltAxis, TiltPoint, TiltScan};
use crate::density::{CycleRecord, Density};
use crate::environment::TemperatureSample;
use crate::error::{Error, Result};
use crate::scalar::SECONDS_PER_DAY;
use crate::zeeman::{time_averaged_field, LaunchScan, ScanPoint, ZeemanConstants};

const CYCLES: u64 = 1;
const LAUNCH: u64 = 2;
const TILT: u64 = 3;
const TRACK: u64 = 4;
const THERMAL: u64 = 5;

fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Injected ground truth of a synthetic run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub maser_offset: f64,
    pub other_bias: f64,
    /// Collisional shift at the nominal low density.
    pub collision_shift_low: f64,
    /// Zero-density frequency relative to the maser.
    pub zero_density_y: f64,
    pub k: f64,
    pub a_h: f64,
    pub a_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub cycles: Vec<CycleRecord<f64>>,
    pub truth: Truth,
}

/// Alternating high/low density cycles with white frequency noise.
pub fn simulate_run(config: &FountainConfig, n_cycles: usize) -> Result<SyntheticDataset> {
    config.validate()?;
    if n_cycles == 0 || !n_cycles.is_multiple_of(2) {
        return Err(Error::invalid(format!("cycle count {n_cycles} must be even and > 0")));
    }
    let c = config;
    let base = c.maser_offset + c.other_bias;
    let cycles = (0..n_cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(c.seed, CYCLES, i as u64);
            let high = i % 2 == 0;
            let (n0, a) = if high { (c.k * c.n_low, c.a_h) } else { (c.n_low, c.a_l) };
            let n_atoms = (n0 * (1.0 + c.atom_fluct * normal(&mut rng))).max(1e-3 * n0);
            let collision = c.collision_coeff * n_atoms / c.n_low;
            let noise = a / c.cycle_s.sqrt() * normal(&mut rng);
            CycleRecord {
                mjd: c.mjd_start + i as f64 * c.cycle_s / SECONDS_PER_DAY,
                density: if high { Density::High } else { Density::Low },
                y: base + collision + noise,
                n_atoms,
            }
        })
        .collect();
    Ok(SyntheticDataset {
        cycles,
        truth: Truth {
            maser_offset: c.maser_offset,
            other_bias: c.other_bias,
            collision_shift_low: c.collision_coeff,
            zero_density_y: base,
            k: c.k,
            a_h: c.a_h,
            a_l: c.a_l,
        },
    })
}

/// Field-sensitive fringe offsets for launches to `heights_mm`.
pub fn simulate_launch_scan(config: &FountainConfig, heights_mm: &[f64]) -> Result<LaunchScan<f64>> {
    config.validate()?;
    let k1 = ZeemanConstants::<f64>::default();
    let kin = config.kinematics();
    let entries = heights_mm
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let b = time_averaged_field(&config.true_field_map, *h, &kin)?;
            let mut rng = stream(config.seed, LAUNCH, i as u64);
            Ok(ScanPoint {
                height_mm: *h,
                fringe_hz: k1.fringe_from_field(b) + config.fringe_noise_hz * normal(&mut rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LaunchScan::new(entries)
}

/// Routine-height fringe tracked over a campaign, with a slow sinusoidal field drift.
pub fn simulate_fringe_track(config: &FountainConfig, apogee_mm: f64, n_points: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if n_points == 0 {
        return Err(Error::invalid("fringe track needs at least one point"));
    }
    let k1 = ZeemanConstants::<f64>::default();
    let b0 = time_averaged_field(&config.true_field_map, apogee_mm, &config.kinematics())?;
    Ok((0..n_points)
        .map(|i| {
            let phase = std::f64::consts::TAU * i as f64 / n_points.max(2) as f64;
            let b = b0 + 0.5 * config.field_drift_nt * phase.sin();
            let mut rng = stream(config.seed, TRACK, i as u64);
            k1.fringe_from_field(b) + config.fringe_noise_hz * normal(&mut rng)
        })
        .collect())
}

/// Feed-difference frequencies at the requested tilt settings; each setting
/// carries the configured adjustment error.
pub fn simulate_tilt_scan(
    config: &FountainConfig,
    axis: TiltAxis,
    pulse: RamseyPulse,
    angles_mrad: &[f64],
    noise: f64,
) -> Result<TiltScan<f64>> {
    config.validate()?;
    if angles_mrad.len() < 2 {
        return Err(Error::invalid("tilt scan needs at least two angles"));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid("tilt noise must be >= 0"));
    }
    let truth = config
        .tilt_truth
        .iter()
        .find(|t| t.axis == axis && t.pulse == pulse)
        .ok_or_else(|| Error::invalid(format!("no tilt truth for axis {} / {}", axis.as_str(), pulse.as_str())))?;
    let domain = TILT + 16 * (axis as u64 * 2 + pulse as u64);
    let points = angles_mrad
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut rng = stream(config.seed, domain, i as u64);
            let actual = theta + config.tilt_adjustment_mrad * normal(&mut rng);
            TiltPoint {
                theta_mrad: theta,
                dy_frac: truth.gradient_per_mrad * (actual - truth.theta_opt_mrad) + noise * normal(&mut rng),
                sigma: None,
            }
        })
        .collect();
    TiltScan::new(axis, pulse, points, config.tilt_adjustment_mrad)
}

/// Everything a full evaluation consumes, generated from one config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCampaign {
    pub dataset: SyntheticDataset,
    pub launch_scan: LaunchScan<f64>,
    pub fringe_track_hz: Vec<f64>,
    pub routine_apogee_mm: f64,
    pub tilt_scans: Vec<TiltScan<f64>>,
    pub temperature_log: Vec<TemperatureSample>,
}

/// Launch heights every 10 mm from just above the cavity to the top of the map.
pub fn default_scan_heights(config: &FountainConfig) -> Vec<f64> {
    let cavity_mm = config.cavity_height * 1000.0;
    let top = config.true_field_map.z_range().1;
    let first = (cavity_mm / 10.0).floor() * 10.0 + 10.0;
    (0..)
        .map(|i| first + 10.0 * i as f64)
        .take_while(|h| *h <= top)
        .collect()
}

pub const DEFAULT_TILT_ANGLES_MRAD: [f64; 13] = [
    -12.0, -10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0,
];

pub fn simulate_campaign(config: &FountainConfig, n_cycles: usize) -> Result<SyntheticCampaign> {
    let dataset = simulate_run(config, n_cycles)?;
    let launch_scan = simulate_launch_scan(config, &default_scan_heights(config))?;
    let routine_apogee_mm = super::ballistic_timing(config)?.apogee_m * 1000.0;
    let fringe_track_hz = simulate_fringe_track(config, routine_apogee_mm, 30)?;
    let tilt_scans = config
        .tilt_truth
        .iter()
        .map(|t| simulate_tilt_scan(config, t.axis, t.pulse, &DEFAULT_TILT_ANGLES_MRAD, t.noise))
        .collect::<Result<Vec<_>>>()?;
    let span_days = n_cycles as f64 * config.cycle_s / SECONDS_PER_DAY;
    let temperature_log = simulate_temperature_log(config, 200, span_days)?;
    Ok(SyntheticCampaign {
        dataset,
        launch_scan,
        fringe_track_hz,
        routine_apogee_mm,
        tilt_scans,
        temperature_log,
    })
}

/// Gaussian time-of-flight trace over ±3σ of the nominal width.
pub fn simulate_tof(config: &FountainConfig, density: Density) -> Result<Vec<f64>> {
    config.validate()?;
    let (amp, width) = match density {
        Density::High => (
            config.k * config.n_low,
            config.cloud_sigma * (1.0 + config.tof_distortion),
        ),
        Density::Low => (config.n_low, config.cloud_sigma),
    };
    let n = config.tof_samples;
    let half = 3.0 * config.cloud_sigma;
    Ok((0..n)
        .map(|i| {
            let t = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            amp * (-0.5 * (t / width).powi(2)).exp()
        })
        .collect())
}

/// Top/bottom flight-tube thermometer readings over `span_days`.
pub fn simulate_temperature_log(
    config: &FountainConfig,
    n_samples: usize,
    span_days: f64,
) -> Result<Vec<TemperatureSample>> {
    config.validate()?;
    if n_samples == 0 || !(span_days >= 0.0) {
        return Err(Error::invalid("temperature log needs samples and a non-negative span"));
    }
    Ok((0..n_samples)
        .map(|i| {
            let frac = if n_samples > 1 {
                i as f64 / (n_samples - 1) as f64
            } else {
                0.0
            };
            let mut rng = stream(config.seed, THERMAL, i as u64);
            let mid = config.temperature_k
                + 0.5 * config.temperature_swing_k * (std::f64::consts::TAU * frac * span_days.max(1.0)).sin()
                + 0.005 * normal(&mut rng);
            let half_grad = 0.5 * config.temperature_gradient_k;
            TemperatureSample {
                mjd: config.mjd_start + frac * span_days,
                t_top_k: mid + half_grad,
                t_bottom_k: mid - half_grad,
            }
        })
        .collect())
}
