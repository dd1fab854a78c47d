//! Cold-collision shift from interleaved high/low density operation, the
//! type-A statistics of the zero-density frequency, and the TOF lineshape
//! check behind the linear-density assumption.

mod allan;
mod tof;

pub use allan::{allan_deviation, fit_white_fm, AdevPoint};
pub use tof::tof_nonlinearity;

use serde::{Deserialize, Serialize};

use crate::budget::{check_uncertainty, FractionalShift};
use crate::error::{Error, Result};
use crate::scalar::{mean, sample_std, Real, SECONDS_PER_DAY};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Density {
    #[serde(rename = "H")]
    High,
    #[serde(rename = "L")]
    Low,
}

impl Density {
    pub fn as_str(self) -> &'static str {
        match self {
            Density::High => "H",
            Density::Low => "L",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "H" | "h" => Some(Density::High),
            "L" | "l" => Some(Density::Low),
            _ => None,
        }
    }
}

/// One fountain cycle. Timestamps stay `f64` so cycle spacing survives at MJD ~6e4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord<T> {
    pub mjd: f64,
    pub density: Density,
    /// Fractional frequency relative to the reference maser.
    pub y: T,
    pub n_atoms: T,
}

impl<T: Real> CycleRecord<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.mjd.is_finite() {
            return Err(Error::invalid("cycle timestamp must be finite"));
        }
        if !self.y.is_finite() {
            return Err(Error::invalid(format!("cycle at MJD {} has non-finite y", self.mjd)));
        }
        if !(self.n_atoms > T::zero() && self.n_atoms.is_finite()) {
            return Err(Error::invalid(format!(
                "cycle at MJD {} has atom number <= 0",
                self.mjd
            )));
        }
        Ok(())
    }
}

fn check_k<T: Real>(k: T) -> Result<()> {
    if !(k > T::one() && k.is_finite()) {
        return Err(Error::invalid(format!("density ratio k = {k} must be > 1")));
    }
    Ok(())
}

/// Zero-density frequency and the collisional shift at low density.
pub fn extrapolate_zero<T: Real>(y_h: T, y_l: T, k: T) -> Result<(T, T)> {
    check_k(k)?;
    let shift_low = (y_h - y_l) / (k - T::one());
    Ok((y_l - shift_low, shift_low))
}

/// Relative uncertainty of the density ratio.
pub fn sigma_k<T: Real>(sigma_nonlinear: T, rel_fluct_h: T, rel_fluct_l: T, k: T) -> Result<T> {
    check_k(k)?;
    check_uncertainty("nonlinearity", sigma_nonlinear)?;
    check_uncertainty("high-density fluctuation", rel_fluct_h)?;
    check_uncertainty("low-density fluctuation", rel_fluct_l)?;
    let fluct = rel_fluct_l.hypot(rel_fluct_h) * k;
    Ok(sigma_nonlinear.hypot(fluct))
}

/// `|y_H − y_L| / (k − 1)² · σ_k`.
pub fn collisional_uncertainty<T: Real>(dy: T, k: T, sigma_k: T) -> Result<T> {
    check_k(k)?;
    check_uncertainty("sigma_k", sigma_k)?;
    if !dy.is_finite() {
        return Err(Error::invalid("frequency difference must be finite"));
    }
    Ok(dy.abs() / (k - T::one()).powi(2) * sigma_k)
}

/// 1-s white-FM coefficient of the zero-density frequency.
pub fn zero_density_stability<T: Real>(a_h: T, a_l: T, k: T) -> Result<T> {
    check_k(k)?;
    check_uncertainty("A_H", a_h)?;
    check_uncertainty("A_L", a_l)?;
    let inner = (k * a_l).hypot(a_h);
    Ok(T::SQRT_2() / (k - T::one()) * inner)
}

/// White-FM coefficient averaged over `duration_s`.
pub fn type_a<T: Real>(a_z: T, duration_s: T) -> Result<T> {
    check_uncertainty("A_z", a_z)?;
    if !(duration_s > T::zero()) {
        return Err(Error::invalid("campaign duration must be > 0"));
    }
    Ok(a_z / duration_s.sqrt())
}

/// Per-density summary of a cycle stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityStats<T> {
    pub k: T,
    pub sigma_nonlinear: T,
    pub rel_fluct_h: T,
    pub rel_fluct_l: T,
    pub y_h: T,
    pub y_l: T,
    pub n_h: usize,
    pub n_l: usize,
}

impl<T: Real> DensityStats<T> {
    pub fn from_records(records: &[CycleRecord<T>], sigma_nonlinear: T) -> Result<Self> {
        check_uncertainty("nonlinearity", sigma_nonlinear)?;
        for r in records {
            r.validate()?;
        }
        let (h, l) = split(records);
        if h.len() < 2 || l.len() < 2 {
            return Err(Error::invalid("need at least two cycles at each density"));
        }
        let atoms = |v: &[CycleRecord<T>]| v.iter().map(|r| r.n_atoms).collect::<Vec<_>>();
        let freqs = |v: &[CycleRecord<T>]| v.iter().map(|r| r.y).collect::<Vec<_>>();
        let (nh, nl) = (atoms(&h), atoms(&l));
        let (mh, ml) = (mean(&nh), mean(&nl));
        let k = mh / ml;
        check_k(k)?;
        Ok(Self {
            k,
            sigma_nonlinear,
            rel_fluct_h: sample_std(&nh) / mh,
            rel_fluct_l: sample_std(&nl) / ml,
            y_h: mean(&freqs(&h)),
            y_l: mean(&freqs(&l)),
            n_h: h.len(),
            n_l: l.len(),
        })
    }

    pub fn sigma_k(&self) -> Result<T> {
        sigma_k(self.sigma_nonlinear, self.rel_fluct_h, self.rel_fluct_l, self.k)
    }
}

fn split<T: Real>(records: &[CycleRecord<T>]) -> (Vec<CycleRecord<T>>, Vec<CycleRecord<T>>) {
    records.iter().partition(|r| r.density == Density::High)
}

/// A zero-density point built from one adjacent H/L pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroDensityPoint<T> {
    pub mjd: f64,
    pub y_zero: T,
}

/// Pairs each cycle with its time-adjacent partner of the other density and
/// extrapolates every pair with the common ratio `k`. Unpaired cycles are dropped.
pub fn pair_interleaved<T: Real>(records: &[CycleRecord<T>], k: T) -> Result<Vec<ZeroDensityPoint<T>>> {
    check_k(k)?;
    let mut sorted: Vec<CycleRecord<T>> = records.to_vec();
    sorted.sort_by(|a, b| a.mjd.total_cmp(&b.mjd));
    let mut out = Vec::with_capacity(sorted.len() / 2);
    let mut i = 0;
    while i + 1 < sorted.len() {
        let (a, b) = (sorted[i], sorted[i + 1]);
        if a.density == b.density {
            i += 1;
            continue;
        }
        let (h, l) = if a.density == Density::High { (a, b) } else { (b, a) };
        let (y_zero, _) = extrapolate_zero(h.y, l.y, k)?;
        out.push(ZeroDensityPoint {
            mjd: 0.5 * (a.mjd + b.mjd),
            y_zero,
        });
        i += 2;
    }
    Ok(out)
}

/// Collisional evaluation of a campaign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionalResult<T> {
    pub stats: DensityStats<T>,
    pub y_zero: T,
    /// Collisional shift at low density (the budget bias).
    pub shift_low: FractionalShift<T>,
    pub sigma_k: T,
    pub u_b: T,
}

pub fn evaluate_collisional<T: Real>(records: &[CycleRecord<T>], sigma_nonlinear: T) -> Result<CollisionalResult<T>> {
    let stats = DensityStats::from_records(records, sigma_nonlinear)?;
    let (y_zero, shift) = extrapolate_zero(stats.y_h, stats.y_l, stats.k)?;
    let sk = stats.sigma_k()?;
    Ok(CollisionalResult {
        stats,
        y_zero,
        shift_low: FractionalShift::new(shift)?,
        sigma_k: sk,
        u_b: collisional_uncertainty(stats.y_h - stats.y_l, stats.k, sk)?,
    })
}

/// White-FM coefficients per density and at zero density, with the type-A
/// uncertainty over the campaign length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult<T> {
    pub a_h: T,
    pub a_l: T,
    pub a_z: T,
    pub duration_s: T,
    pub u_a: T,
}

/// Fits τ^(−1/2) coefficients to each density stream and combines them.
/// `cycle_s` is the fountain cycle; the coefficients refer to time spent at
/// each density and `a_z` to elapsed time.
pub fn evaluate_stability<T: Real>(records: &[CycleRecord<T>], k: T, cycle_s: T) -> Result<StabilityResult<T>> {
    check_k(k)?;
    if !(cycle_s > T::zero()) {
        return Err(Error::invalid("cycle time must be > 0"));
    }
    let (h, l) = split(records);
    let coeff = |v: &[CycleRecord<T>]| -> Result<T> {
        let y: Vec<T> = v.iter().map(|r| r.y).collect();
        // τ counts the time spent at this density, one cycle per sample
        let adev = allan_deviation(&y, cycle_s)?;
        fit_white_fm(&adev)
    };
    let a_h = coeff(&h)?;
    let a_l = coeff(&l)?;
    let a_z = zero_density_stability(a_h, a_l, k)?;
    let first = records.iter().map(|r| r.mjd).fold(f64::INFINITY, f64::min);
    let last = records.iter().map(|r| r.mjd).fold(f64::NEG_INFINITY, f64::max);
    let duration_s = T::lit(((last - first) * SECONDS_PER_DAY).max(0.0)) + cycle_s;
    Ok(StabilityResult {
        a_h,
        a_l,
        a_z,
        duration_s,
        u_a: type_a(a_z, duration_s)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extrapolation_cases() {
        let (z, s) = extrapolate_zero(3e-15_f64, 3e-15, 2.3).unwrap();
        assert_eq!((z, s), (3e-15, 0.0));
        let (_, s) = extrapolate_zero(-2.86e-15_f64, 0.0, 2.3).unwrap();
        assert!((s - -2.2e-15).abs() < 1e-20, "{s:e}");
        let a = 1e-15_f64;
        let (z, _) = extrapolate_zero(2.0 * a, a, 2.0).unwrap();
        assert!(z.abs() < 1e-30);
        assert!(extrapolate_zero(1.0_f64, 0.0, 1.0).is_err());
        assert!(extrapolate_zero(1.0_f64, 0.0, 0.5).is_err());
    }

    #[test]
    fn sigma_k_cases() {
        let s = sigma_k(0.01_f64, 0.04, 0.04, 2.3).unwrap();
        assert!((s - 0.1305).abs() < 5e-4, "{s}");
        assert_eq!(sigma_k(0.0_f64, 0.0, 0.0, 2.3).unwrap(), 0.0);
        assert_eq!(sigma_k(0.05_f64, 0.0, 0.0, 7.0).unwrap(), 0.05);
    }

    #[test]
    fn collisional_uncertainty_cases() {
        assert_eq!(collisional_uncertainty(-2.86e-15_f64, 2.3, 0.0).unwrap(), 0.0);
        let u = collisional_uncertainty(-2.86e-15_f64, 2.3, 0.13).unwrap();
        assert!((u - 2.2e-16).abs() < 0.05e-16, "{u:e}");
        let u2 = collisional_uncertainty(-2.86e-15_f64, 2.3, 0.26).unwrap();
        assert!((u2 / u - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stability_cases() {
        let a = zero_density_stability(1.0e-13_f64, 1.4e-13, 2.3).unwrap();
        assert!((a - 3.7e-13).abs() <= 0.05e-13, "{a:e}");
        let big = zero_density_stability(1e-13_f64, 1e-13, 1e6).unwrap();
        assert!((big / (2f64.sqrt() * 1e-13) - 1.0).abs() < 1e-5);
        let k2 = zero_density_stability(1e-13_f64, 1e-13, 2.0).unwrap();
        assert!((k2 - 10f64.sqrt() * 1e-13).abs() < 1e-27);
        assert_eq!(zero_density_stability(0.0_f64, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn type_a_cases() {
        let u30 = type_a(3.7e-13_f64, 30.0 * 86400.0).unwrap();
        let u25 = type_a(3.7e-13_f64, 25.0 * 86400.0).unwrap();
        assert!((u30 - 2.3e-16).abs() < 0.05e-16, "{u30:e}");
        assert!((u25 - 2.5e-16).abs() < 0.05e-16, "{u25:e}");
        assert_eq!(type_a(0.0_f64, 10.0).unwrap(), 0.0);
        assert!(type_a(1e-13_f64, 0.0).is_err());
    }

    fn interleaved(n: usize, y_h: impl Fn(usize) -> f64, y_l: impl Fn(usize) -> f64) -> Vec<CycleRecord<f64>> {
        (0..n)
            .map(|i| {
                let high = i % 2 == 0;
                CycleRecord {
                    mjd: 60000.0 + i as f64 * 1.3 / 86400.0,
                    density: if high { Density::High } else { Density::Low },
                    y: if high { y_h(i) } else { y_l(i) },
                    n_atoms: if high { 2.3e6 } else { 1e6 },
                }
            })
            .collect()
    }

    #[test]
    fn pairing_commutes_with_averaging() {
        let recs = interleaved(
            400,
            |i| -2.86e-15 + 1e-15 * ((i as f64) * 0.37).sin(),
            |i| 1e-15 * ((i as f64) * 0.11).cos(),
        );
        let stats = DensityStats::from_records(&recs, 0.01).unwrap();
        assert!((stats.k - 2.3).abs() < 1e-12);
        let (z, _) = extrapolate_zero(stats.y_h, stats.y_l, stats.k).unwrap();
        let pts = pair_interleaved(&recs, stats.k).unwrap();
        assert_eq!(pts.len(), 200);
        let avg = pts.iter().map(|p| p.y_zero).sum::<f64>() / pts.len() as f64;
        assert!((avg - z).abs() < 1e-27, "{avg:e} vs {z:e}");
    }

    #[test]
    fn pairing_drops_unmatched() {
        let mut recs = interleaved(5, |_| 0.0, |_| 0.0);
        recs[2].density = Density::Low;
        let pts = pair_interleaved(&recs, 2.3).unwrap();
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn record_validation() {
        let r = CycleRecord {
            mjd: 60000.0,
            density: Density::High,
            y: 0.0,
            n_atoms: 0.0,
        };
        assert!(r.validate().is_err());
        assert!(CycleRecord {
            y: f64::NAN,
            n_atoms: 1.0,
            ..r
        }
        .validate()
        .is_err());
    }

    #[test]
    fn density_flag_parse() {
        assert_eq!(Density::parse("H"), Some(Density::High));
        assert_eq!(Density::parse(" L "), Some(Density::Low));
        assert_eq!(Density::parse("x"), None);
        assert_eq!(serde_json::to_string(&Density::Low).unwrap(), "\"L\"");
    }

    proptest! {
        #[test]
        fn extrapolation_identity(y_h in -1e-14f64..1e-14, y_l in -1e-14f64..1e-14, k in 1.01f64..10.0) {
            let (z, s) = extrapolate_zero(y_h, y_l, k).unwrap();
            prop_assert_eq!(z, y_l - s);
        }

        #[test]
        fn stability_monotone(a_h in 1e-14f64..1e-12, r in 1.0f64..3.0, k in 1.1f64..10.0, f in 1.001f64..2.0) {
            let a_l = a_h * r;
            let base = zero_density_stability(a_h, a_l, k).unwrap();
            prop_assert!(zero_density_stability(a_h * f, a_l, k).unwrap() > base);
            prop_assert!(zero_density_stability(a_h, a_l * f, k).unwrap() > base);
            prop_assert!(zero_density_stability(a_h, a_l, k * f).unwrap() < base);
            prop_assert!(base >= a_h);
        }
    }
}
