//! End-to-end evaluation: raw campaign data in, accuracy budget out.

use serde::{Deserialize, Serialize};

use crate::budget::{assemble_budget, names, Budget, FractionalShift, UncertaintyEntry, LOW_DENSITY_NOTE};
use crate::dcp::{evaluate_dcp, DcpOptions, DcpResult, TiltScan};
use crate::density::{evaluate_collisional, evaluate_stability, CollisionalResult, CycleRecord, StabilityResult};
use crate::environment::{
    background_gas_bound, bounded_shift, effective_temperature, gravitational_redshift, BbrConstants,
    EffectiveTemperature, GravityParams, TemperatureBudget, TemperatureSample,
};
use crate::error::{Error, Result};
use crate::interrogation::{cavity_pulling_shift, pulling_shift, CavityParams, InterrogationConfig, PullingScenario};
use crate::simulator::{FountainConfig, SyntheticCampaign};
use crate::zeeman::{
    evaluate_zeeman, reconstruct_field_map, trajectory_field_stats, FieldReconstruction, Kinematics, LaunchScan,
    ReconstructionOptions, TrajectoryStats, ZeemanConstants, ZeemanResult,
};

/// Every constant and bound the evaluation uses. Loaded from JSON with
/// missing fields taking their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub zeeman: ZeemanConstants<f64>,
    pub reconstruction_target_nt: f64,
    pub bbr: BbrConstants<f64>,
    pub temperature: TemperatureBudget,
    /// Used when no temperature log is supplied.
    pub temperature_k: f64,
    pub gravity: GravityParams<f64>,
    /// Non-linearity of the atom-number/density relation.
    pub sigma_nonlinear: f64,
    pub dcp: DcpOptions<f64>,
    pub tilt_adjustment_mrad: f64,
    /// Light shift with the shutters open, fractional.
    pub light_shift_open: f64,
    pub light_suppression: f64,
    pub background_pressure_pa: f64,
    pub background_coeff_per_pa: f64,
    pub cavity: CavityParams<f64>,
    /// Pulse area at which the cavity pulling is bounded, rad.
    pub cavity_pulse_area: f64,
    pub pulling: PullingScenario<f64>,
    /// Measured upper bounds for effects evaluated outside this pipeline.
    pub switch_u: f64,
    pub leakage_u: f64,
    pub spectral_u: f64,
    pub majorana_u: f64,
    pub pulling_floor_u: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            zeeman: ZeemanConstants::default(),
            reconstruction_target_nt: 0.1,
            bbr: BbrConstants::default(),
            temperature: TemperatureBudget::default(),
            temperature_k: 296.78,
            gravity: GravityParams::new(78.9, 0.2),
            sigma_nonlinear: 0.01,
            dcp: DcpOptions::default(),
            tilt_adjustment_mrad: 0.05,
            light_shift_open: 1.0e-15,
            light_suppression: 1.0e3,
            background_pressure_pa: 2.0e-8,
            background_coeff_per_pa: 5.0e-10,
            cavity: CavityParams {
                q_c: 12_000.0,
                delta_fc_hz: 60e3,
                thermal_coeff_hz_per_k: -150e3,
            },
            cavity_pulse_area: 1.1 * std::f64::consts::FRAC_PI_2,
            pulling: PullingScenario::nominal(),
            switch_u: 1.0e-16,
            leakage_u: 0.1e-16,
            spectral_u: 0.1e-16,
            majorana_u: 0.1e-16,
            pulling_floor_u: 0.1e-16,
        }
    }
}

impl Constants {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<constants>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialise")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeemanEvaluation {
    pub reconstruction: FieldReconstruction<f64>,
    /// Statistics of the reconstructed map along the routine arc.
    pub arc: TrajectoryStats<f64>,
    pub result: ZeemanResult<f64>,
}

/// Reconstructs the C-field, then takes ⟨B⟩ from the routine fringe track
/// (or from the map when no track is given). The inhomogeneity term uses
/// the peak-to-peak of the map between cavity and apogee.
pub fn evaluate_zeeman_data(
    scan: &LaunchScan<f64>,
    fringe_track_hz: Option<&[f64]>,
    kin: &Kinematics<f64>,
    routine_apogee_mm: f64,
    constants: &Constants,
) -> Result<ZeemanEvaluation> {
    let opts = ReconstructionOptions {
        target_residual_nt: constants.reconstruction_target_nt,
        lambda: None,
        constants: constants.zeeman,
    };
    let reconstruction = reconstruct_field_map(scan, kin, &opts)?;
    let arc = trajectory_field_stats(&reconstruction.map, routine_apogee_mm, kin)?;
    let (mean_b, temporal) = match fringe_track_hz {
        Some(track) if !track.is_empty() => {
            let mean = track.iter().sum::<f64>() / track.len() as f64;
            (
                constants.zeeman.field_from_fringe(mean)?,
                constants.zeeman.temporal_variation(track)?,
            )
        }
        _ => (arc.mean_nt, 0.0),
    };
    let result = evaluate_zeeman(&constants.zeeman, mean_b, arc.peak_to_peak_nt, temporal)?;
    Ok(ZeemanEvaluation {
        reconstruction,
        arc,
        result,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentEvaluation {
    pub temperature: EffectiveTemperature,
    pub bbr_shift: f64,
    pub bbr_u: f64,
    pub gravity_shift: f64,
    pub gravity_u: f64,
    pub light_u: f64,
    pub background_u: f64,
}

pub fn evaluate_environment(log: Option<&[TemperatureSample]>, constants: &Constants) -> Result<EnvironmentEvaluation> {
    let temperature = match log {
        Some(l) => effective_temperature(l, &constants.temperature)?,
        None => EffectiveTemperature {
            mean_k: constants.temperature_k,
            uncertainty_k: constants.temperature.floor,
            max_gradient_k: 0.0,
            peak_to_peak_k: 0.0,
        },
    };
    let bbr = constants.bbr.shift(temperature.mean_k)?;
    let bbr_u = constants
        .bbr
        .uncertainty(temperature.mean_k, temperature.uncertainty_k)?;
    let (g_shift, g_u) = gravitational_redshift(&constants.gravity)?;
    Ok(EnvironmentEvaluation {
        temperature,
        bbr_shift: bbr.value(),
        bbr_u: bbr_u.total(),
        gravity_shift: g_shift.value(),
        gravity_u: g_u,
        light_u: bounded_shift(
            FractionalShift::new(constants.light_shift_open)?,
            constants.light_suppression,
        )?,
        background_u: background_gas_bound(constants.background_pressure_pa, constants.background_coeff_per_pa)?,
    })
}

/// Interrogation-model shifts that are bounded rather than corrected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelShifts {
    pub cavity_pulling: f64,
    pub pulling: f64,
}

pub fn evaluate_model_shifts(interrogation: &InterrogationConfig<f64>, constants: &Constants) -> Result<ModelShifts> {
    let detuned =
        InterrogationConfig::from_pulse_area(constants.cavity_pulse_area, interrogation.tau_in, interrogation.t_r)?;
    Ok(ModelShifts {
        cavity_pulling: cavity_pulling_shift(&constants.cavity, &detuned)?.value(),
        pulling: pulling_shift(&constants.pulling, interrogation)?.value(),
    })
}

/// Everything needed for a full evaluation. Missing inputs fall back to the
/// constants (environment) or are reported as errors (the rest).
#[derive(Clone, Copy, Debug)]
pub struct CampaignData<'a> {
    pub cycles: &'a [CycleRecord<f64>],
    pub cycle_s: f64,
    pub launch_scan: &'a LaunchScan<f64>,
    pub fringe_track_hz: Option<&'a [f64]>,
    pub kinematics: Kinematics<f64>,
    pub routine_apogee_mm: f64,
    pub interrogation: InterrogationConfig<f64>,
    pub tilt_scans: &'a [TiltScan<f64>],
    pub temperature_log: Option<&'a [TemperatureSample]>,
}

impl<'a> CampaignData<'a> {
    /// Views a simulated campaign together with the kinematics of its config.
    pub fn from_synthetic(campaign: &'a SyntheticCampaign, config: &FountainConfig) -> Result<Self> {
        Ok(Self {
            cycles: &campaign.dataset.cycles,
            cycle_s: config.cycle_s,
            launch_scan: &campaign.launch_scan,
            fringe_track_hz: Some(&campaign.fringe_track_hz),
            kinematics: config.kinematics(),
            routine_apogee_mm: campaign.routine_apogee_mm,
            interrogation: config.interrogation()?,
            tilt_scans: &campaign.tilt_scans,
            temperature_log: Some(&campaign.temperature_log),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub zeeman: ZeemanEvaluation,
    pub collisional: CollisionalResult<f64>,
    pub stability: StabilityResult<f64>,
    pub dcp: DcpResult<f64>,
    pub environment: EnvironmentEvaluation,
    pub model: ModelShifts,
    pub budget: Budget<f64>,
}

impl Evaluation {
    /// Detailed results with the budget in its report form.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "zeeman": self.zeeman,
            "collisional": self.collisional,
            "stability": self.stability,
            "dcp": self.dcp,
            "environment": self.environment,
            "model": self.model,
            "budget": self.budget.to_report(),
        })
    }
}

pub fn evaluate_campaign(data: &CampaignData<'_>, constants: &Constants) -> Result<Evaluation> {
    let zeeman = evaluate_zeeman_data(
        data.launch_scan,
        data.fringe_track_hz,
        &data.kinematics,
        data.routine_apogee_mm,
        constants,
    )?;
    let collisional = evaluate_collisional(data.cycles, constants.sigma_nonlinear)?;
    let stability = evaluate_stability(data.cycles, collisional.stats.k, data.cycle_s)?;
    let dcp = evaluate_dcp(data.tilt_scans, &constants.dcp)?;
    let environment = evaluate_environment(data.temperature_log, constants)?;
    let model = evaluate_model_shifts(&data.interrogation, constants)?;
    let budget = budget_from_parts(&zeeman.result, &collisional, &dcp, &environment, &model, constants)?;
    Ok(Evaluation {
        zeeman,
        collisional,
        stability,
        dcp,
        environment,
        model,
        budget,
    })
}

/// Assembles the budget rows in the reference order.
pub fn budget_from_parts(
    zeeman: &ZeemanResult<f64>,
    collisional: &CollisionalResult<f64>,
    dcp: &DcpResult<f64>,
    env: &EnvironmentEvaluation,
    model: &ModelShifts,
    c: &Constants,
) -> Result<Budget<f64>> {
    use names::*;
    let zero = FractionalShift::zero;
    let entries = vec![
        UncertaintyEntry::new(ZEEMAN, zeeman.bias, zeeman.u_b)?,
        UncertaintyEntry::new(COLD_COLLISIONS, collisional.shift_low, collisional.u_b)?.with_footnote(LOW_DENSITY_NOTE),
        UncertaintyEntry::new(SWITCH, zero(), c.switch_u)?,
        UncertaintyEntry::new(LEAKAGE, zero(), c.leakage_u)?,
        UncertaintyEntry::new(DCP, zero(), dcp.u_total)?.with_decimals(1, 2),
        UncertaintyEntry::new(SPECTRAL_IMPURITIES, zero(), c.spectral_u)?,
        UncertaintyEntry::new(BBR, FractionalShift::new(env.bbr_shift)?, env.bbr_u)?,
        UncertaintyEntry::new(GRAVITY, FractionalShift::new(env.gravity_shift)?, env.gravity_u)?,
        UncertaintyEntry::new(LIGHT_SHIFT, zero(), env.light_u)?.with_decimals(1, 2),
        UncertaintyEntry::new(MAJORANA, zero(), c.majorana_u)?,
        UncertaintyEntry::new(PULLING, zero(), model.pulling.abs().max(c.pulling_floor_u))?,
        UncertaintyEntry::new(CAVITY_PULLING, zero(), model.cavity_pulling.abs())?.with_decimals(1, 2),
        UncertaintyEntry::new(BACKGROUND_GAS, zero(), env.background_u)?,
    ];
    assemble_budget(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::round_to;

    #[test]
    fn constants_json_round_trip() {
        let c = Constants::default();
        assert_eq!(Constants::from_json(&c.to_json()).unwrap(), c);
        let partial = Constants::from_json(r#"{"sigma_nonlinear": 0.02}"#).unwrap();
        assert_eq!(partial.sigma_nonlinear, 0.02);
        assert_eq!(partial.temperature_k, 296.78);
        assert!(Constants::from_json("[").is_err());
    }

    #[test]
    fn environment_defaults_match_reference_rows() {
        let e = evaluate_environment(None, &Constants::default()).unwrap();
        assert_eq!(round_to(e.bbr_shift * 1e16, 1), -165.9);
        assert_eq!(round_to(e.bbr_u * 1e16, 1), 0.5);
        assert_eq!(round_to(e.gravity_shift * 1e16, 1), 86.0);
        assert_eq!(round_to(e.gravity_u * 1e16, 1), 0.2);
        assert_eq!(round_to(e.light_u * 1e16, 2), 0.01);
        assert_eq!(round_to(e.background_u * 1e16, 1), 0.1);
    }

    #[test]
    fn model_shifts_are_small() {
        let m = evaluate_model_shifts(&InterrogationConfig::nominal(), &Constants::default()).unwrap();
        assert_eq!(round_to(m.cavity_pulling.abs() * 1e16, 2), 0.02);
        assert!(m.pulling.abs() < 0.1e-16, "{:e}", m.pulling);
    }
}
