//! Distributed-cavity-phase evaluation from fountain tilt scans.
//!
//! For each tilt axis the frequency difference between opposite cavity feeds is
//! measured against tilt angle. The zero crossing of a straight-line fit is the
//! optimal tilt; its uncertainty comes from a Monte-Carlo refit in which every
//! angle is jittered by the adjustment error and every frequency by its point
//! uncertainty.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{check_uncertainty, rss_combine};
use crate::error::{Error, Result};
use crate::linalg::fit_line;
use crate::scalar::{sample_std, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TiltAxis {
    X,
    Y,
}

impl TiltAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            TiltAxis::X => "X",
            TiltAxis::Y => "Y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "X" | "x" => Some(TiltAxis::X),
            "Y" | "y" => Some(TiltAxis::Y),
            _ => None,
        }
    }
}

/// Ramsey pulse area used during the scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RamseyPulse {
    #[serde(rename = "pi/2")]
    HalfPi,
    #[serde(rename = "3pi/2")]
    ThreeHalfPi,
}

impl RamseyPulse {
    pub fn as_str(self) -> &'static str {
        match self {
            RamseyPulse::HalfPi => "pi/2",
            RamseyPulse::ThreeHalfPi => "3pi/2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "pi/2" | "π/2" | "1" => Some(RamseyPulse::HalfPi),
            "3pi/2" | "3π/2" | "3" => Some(RamseyPulse::ThreeHalfPi),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltPoint<T> {
    pub theta_mrad: T,
    /// Fractional frequency difference between the φ = 0 and φ = π feeds.
    pub dy_frac: T,
    /// Point uncertainty; `None` falls back to the residual scatter.
    pub sigma: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltScan<T> {
    pub axis: TiltAxis,
    pub pulse: RamseyPulse,
    pub points: Vec<TiltPoint<T>>,
    pub adjustment_error_mrad: T,
}

impl<T: Real> TiltScan<T> {
    pub fn new(
        axis: TiltAxis,
        pulse: RamseyPulse,
        points: Vec<TiltPoint<T>>,
        adjustment_error_mrad: T,
    ) -> Result<Self> {
        let s = Self {
            axis,
            pulse,
            points,
            adjustment_error_mrad,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_uncertainty("adjustment error", self.adjustment_error_mrad)?;
        if self
            .points
            .iter()
            .any(|p| !p.theta_mrad.is_finite() || !p.dy_frac.is_finite())
        {
            return Err(Error::invalid("tilt scan contains non-finite values"));
        }
        if self.points.iter().any(|p| p.sigma.is_some_and(|s| !(s >= T::zero()))) {
            return Err(Error::invalid("tilt point uncertainties must be >= 0"));
        }
        let first = self.points.first().map(|p| p.theta_mrad);
        if !self.points.iter().any(|p| Some(p.theta_mrad) != first) {
            return Err(Error::invalid("tilt scan needs at least two distinct angles"));
        }
        Ok(())
    }
}

/// Straight-line fit of one scan with its Monte-Carlo zero-crossing spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltFit<T> {
    /// Tilt sensitivity, fractional frequency per mrad.
    pub gamma: T,
    pub gamma_sigma: T,
    pub theta_opt_mrad: T,
    /// Standard deviation of the Monte-Carlo zero crossings, mrad.
    pub theta_opt_u_mrad: T,
    pub residual_rms: T,
}

/// Fits the scan and propagates angle and frequency noise into the zero crossing.
/// Trials are seeded by `(seed, trial index)`, so the result does not depend on
/// the thread count.
pub fn fit_tilt_scan<T: Real>(scan: &TiltScan<T>, mc_trials: usize, seed: u64) -> Result<TiltFit<T>> {
    scan.validate()?;
    if mc_trials < 1000 {
        return Err(Error::invalid(format!(
            "at least 1000 Monte-Carlo trials required, got {mc_trials}"
        )));
    }
    let x: Vec<f64> = scan.points.iter().map(|p| p.theta_mrad.to_f64_lossy()).collect();
    let y: Vec<f64> = scan.points.iter().map(|p| p.dy_frac.to_f64_lossy()).collect();
    let fit = fit_line(&x, &y, None).ok_or_else(|| Error::invalid("degenerate tilt scan"))?;
    if fit.slope == 0.0 || fit.slope.abs() < 10.0 * fit.slope_sigma {
        return Err(Error::UnresolvedSensitivity {
            slope: fit.slope,
            sigma: fit.slope_sigma,
        });
    }
    let theta_opt = -fit.intercept / fit.slope;

    let n = x.len() as f64;
    let scatter = if x.len() > 2 {
        fit.residual_rms * (n / (n - 2.0)).sqrt()
    } else {
        0.0
    };
    let sig_y: Vec<f64> = scan
        .points
        .iter()
        .map(|p| p.sigma.map(|s| s.to_f64_lossy()).unwrap_or(scatter))
        .collect();
    let adj = scan.adjustment_error_mrad.to_f64_lossy();

    let crossings: Vec<f64> = (0..mc_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let unit = Normal::new(0.0, 1.0).expect("unit normal");
            let xs: Vec<f64> = x.iter().map(|v| v + adj * unit.sample(&mut rng)).collect();
            let ys: Vec<f64> = y
                .iter()
                .zip(&sig_y)
                .map(|(v, s)| v + s * unit.sample(&mut rng))
                .collect();
            match fit_line(&xs, &ys, None) {
                Some(f) if f.slope != 0.0 => -f.intercept / f.slope,
                _ => f64::NAN,
            }
        })
        .collect();
    let finite: Vec<f64> = crossings.into_iter().filter(|v| v.is_finite()).collect();
    if finite.len() < mc_trials / 2 {
        return Err(Error::Numeric {
            reason: "most Monte-Carlo refits were degenerate".into(),
            steps: mc_trials,
            step_s: 0.0,
        });
    }
    Ok(TiltFit {
        gamma: T::lit(fit.slope),
        gamma_sigma: T::lit(fit.slope_sigma),
        theta_opt_mrad: T::lit(theta_opt),
        theta_opt_u_mrad: T::lit(sample_std(&finite)),
        residual_rms: T::lit(fit.residual_rms),
    })
}

/// `|γ|·δθ·imbalance`.
pub fn dcp_uncertainty<T: Real>(gamma_per_mrad: T, theta_u_mrad: T, power_imbalance: T) -> Result<T> {
    if !gamma_per_mrad.is_finite() {
        return Err(Error::invalid("tilt sensitivity must be finite"));
    }
    check_uncertainty("optimal-tilt uncertainty", theta_u_mrad)?;
    check_uncertainty("power imbalance", power_imbalance)?;
    Ok(gamma_per_mrad.abs() * theta_u_mrad * power_imbalance)
}

/// Root-sum-square of the m = 0, m = 1 (X, Y) and m = 2 contributions.
pub fn combine_dcp<T: Real>(u_m0: T, u_m1_x: T, u_m1_y: T, u_m2: T) -> Result<T> {
    rss_combine(&[u_m0, u_m1_x, u_m1_y, u_m2])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcpOptions<T> {
    pub mc_trials: usize,
    pub seed: u64,
    /// Relative power imbalance of the opposite feeds.
    pub power_imbalance: T,
    pub u_m0: T,
    pub u_m2: T,
}

impl<T: Real> Default for DcpOptions<T> {
    fn default() -> Self {
        Self {
            mc_trials: 10_000,
            seed: 0,
            power_imbalance: T::lit(0.2),
            u_m0: T::lit(0.1e-16),
            u_m2: T::zero(),
        }
    }
}

/// m = 1 evaluation along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisResult<T> {
    pub axis: TiltAxis,
    /// Fit of the π/2 scan, which sets the sensitivity.
    pub fit: TiltFit<T>,
    /// |θ_opt(π/2) − θ_opt(3π/2)| when a 3π/2 scan is supplied.
    pub pulse_discrepancy_mrad: Option<T>,
    /// Larger of the Monte-Carlo spread and the pulse discrepancy.
    pub theta_opt_u_mrad: T,
    pub u_m1: T,
}

pub fn evaluate_axis<T: Real>(
    half_pi: &TiltScan<T>,
    three_half_pi: Option<&TiltScan<T>>,
    opts: &DcpOptions<T>,
) -> Result<AxisResult<T>> {
    if half_pi.pulse != RamseyPulse::HalfPi {
        return Err(Error::invalid("sensitivity scan must use π/2 pulses"));
    }
    let fit = fit_tilt_scan(half_pi, opts.mc_trials, opts.seed)?;
    let discrepancy = match three_half_pi {
        Some(s) => {
            if s.axis != half_pi.axis || s.pulse != RamseyPulse::ThreeHalfPi {
                return Err(Error::invalid("cross-check scan must be 3π/2 on the same axis"));
            }
            let other = fit_tilt_scan(s, opts.mc_trials, opts.seed.wrapping_add(1))?;
            Some((fit.theta_opt_mrad - other.theta_opt_mrad).abs())
        }
        None => None,
    };
    let theta_u = discrepancy.map_or(fit.theta_opt_u_mrad, |d| d.max(fit.theta_opt_u_mrad));
    Ok(AxisResult {
        axis: half_pi.axis,
        fit,
        pulse_discrepancy_mrad: discrepancy,
        theta_opt_u_mrad: theta_u,
        u_m1: dcp_uncertainty(fit.gamma, theta_u, opts.power_imbalance)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcpResult<T> {
    pub x: AxisResult<T>,
    pub y: AxisResult<T>,
    pub u_m0: T,
    pub u_m2: T,
    pub u_total: T,
}

/// Evaluates both axes from a set of scans (π/2 required, 3π/2 optional per axis).
pub fn evaluate_dcp<T: Real>(scans: &[TiltScan<T>], opts: &DcpOptions<T>) -> Result<DcpResult<T>> {
    let find = |axis, pulse| scans.iter().find(|s| s.axis == axis && s.pulse == pulse);
    let axis = |a: TiltAxis| -> Result<AxisResult<T>> {
        let half = find(a, RamseyPulse::HalfPi)
            .ok_or_else(|| Error::invalid(format!("missing π/2 tilt scan for axis {}", a.as_str())))?;
        evaluate_axis(half, find(a, RamseyPulse::ThreeHalfPi), opts)
    };
    let x = axis(TiltAxis::X)?;
    let y = axis(TiltAxis::Y)?;
    check_uncertainty("u_m0", opts.u_m0)?;
    check_uncertainty("u_m2", opts.u_m2)?;
    Ok(DcpResult {
        x,
        y,
        u_m0: opts.u_m0,
        u_m2: opts.u_m2,
        u_total: combine_dcp(opts.u_m0, x.u_m1, y.u_m1, opts.u_m2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::round_to;
    use proptest::prelude::*;

    fn line_scan(slope: f64, x0: f64, adj: f64) -> TiltScan<f64> {
        let points = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&t| TiltPoint {
                theta_mrad: t,
                dy_frac: slope * (t - x0),
                sigma: None,
            })
            .collect();
        TiltScan::new(TiltAxis::X, RamseyPulse::HalfPi, points, adj).unwrap()
    }

    #[test]
    fn exact_line() {
        let f = fit_tilt_scan(&line_scan(2.2e-15, 0.0, 0.0), 1000, 1).unwrap();
        assert!((f.gamma - 2.2e-15).abs() < 1e-27);
        assert!(f.theta_opt_mrad.abs() < 1e-12);
        assert!(f.theta_opt_u_mrad < 1e-12);
    }

    #[test]
    fn adjustment_error_spreads_crossing() {
        let f = fit_tilt_scan(&line_scan(2.2e-15, 0.3, 0.05), 4000, 1).unwrap();
        assert!((f.theta_opt_mrad - 0.3).abs() < 1e-12);
        // jittering five abscissae by 0.05 moves the crossing by about 0.05/sqrt(5)
        assert!(
            (f.theta_opt_u_mrad / (0.05 / 5f64.sqrt()) - 1.0).abs() < 0.15,
            "{}",
            f.theta_opt_u_mrad
        );
    }

    #[test]
    fn unresolved_slope() {
        let points = [(-1.0, 1e-16), (0.0, -1e-16), (1.0, 1.1e-16), (2.0, -0.9e-16)]
            .iter()
            .map(|&(t, y)| TiltPoint {
                theta_mrad: t,
                dy_frac: y,
                sigma: None,
            })
            .collect();
        let s = TiltScan::new(TiltAxis::Y, RamseyPulse::HalfPi, points, 0.05).unwrap();
        assert!(matches!(
            fit_tilt_scan(&s, 1000, 0),
            Err(Error::UnresolvedSensitivity { .. })
        ));
    }

    #[test]
    fn scan_validation() {
        let p = |t| TiltPoint {
            theta_mrad: t,
            dy_frac: 0.0,
            sigma: None,
        };
        assert!(TiltScan::new(TiltAxis::X, RamseyPulse::HalfPi, vec![p(1.0), p(1.0)], 0.05).is_err());
        assert!(TiltScan::new(TiltAxis::X, RamseyPulse::HalfPi, vec![p(1.0), p(2.0)], -0.05).is_err());
        assert!(fit_tilt_scan(&line_scan(1e-15, 0.0, 0.0), 10, 0).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = line_scan(2.2e-15, 0.1, 0.05);
        let a = fit_tilt_scan(&s, 2000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fit_tilt_scan(&s, 2000, 42).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn uncertainty_cases() {
        let x = dcp_uncertainty(2.20e-15_f64, 0.11, 0.2).unwrap();
        assert!((x - 0.484e-16).abs() < 1e-19);
        assert_eq!(round_to(x / 1e-16, 1), 0.5);
        let y = dcp_uncertainty(0.78e-15_f64, 0.44, 0.2).unwrap();
        assert!((y - 0.686e-16).abs() < 1e-19);
        assert_eq!(round_to(y / 1e-16, 1), 0.7);
        assert_eq!(dcp_uncertainty(2.2e-15_f64, 0.0, 0.2).unwrap(), 0.0);
        assert_eq!(
            dcp_uncertainty(-2.2e-15_f64, 0.1, 0.2).unwrap(),
            dcp_uncertainty(2.2e-15, 0.1, 0.2).unwrap()
        );
    }

    #[test]
    fn combine_cases() {
        let t = combine_dcp(0.1e-16_f64, 0.5e-16, 0.7e-16, 0.0).unwrap();
        assert_eq!(round_to(t / 1e-16, 2), 0.87);
        assert_eq!(combine_dcp(0.0_f64, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(combine_dcp(0.0_f64, 0.0, 0.3e-16, 0.0).unwrap(), 0.3e-16);
    }

    #[test]
    fn flag_parsing() {
        assert_eq!(TiltAxis::parse("x"), Some(TiltAxis::X));
        assert_eq!(RamseyPulse::parse("3pi/2"), Some(RamseyPulse::ThreeHalfPi));
        assert_eq!(RamseyPulse::parse("pi"), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn crossing_scale_invariant(scale in 0.1f64..10.0, x0 in -0.5f64..0.5) {
            let s = line_scan(1.5e-15, x0, 0.05);
            let mut scaled = s.clone();
            for p in &mut scaled.points {
                p.dy_frac *= scale;
            }
            let a = fit_tilt_scan(&s, 1000, 3).unwrap();
            let b = fit_tilt_scan(&scaled, 1000, 3).unwrap();
            prop_assert!((a.theta_opt_mrad - b.theta_opt_mrad).abs() < 1e-9);
        }
    }
}
