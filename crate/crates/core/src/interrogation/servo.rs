use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square-wave frequency-modulation lock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServoOptions<T> {
    /// Modulation depth m, Hz.
    pub modulation_depth: T,
    /// Bisection stops once the bracket is narrower than this, Hz.
    pub tolerance: T,
    /// Half-width of the search bracket; `None` uses the modulation depth.
    pub bracket: Option<T>,
}

impl<T: Real> ServoOptions<T> {
    pub fn new(modulation_depth: T) -> Self {
        Self {
            modulation_depth,
            tolerance: T::lit(1e-12),
            bracket: None,
        }
    }
}

/// Lock point δ* with `signal(δ*+m) = signal(δ*−m)`.
pub fn servo_zero<T: Real>(signal: impl Fn(T) -> T, modulation_depth: T) -> Result<T> {
    servo_zero_with(signal, &ServoOptions::new(modulation_depth))
}

pub fn servo_zero_with<T: Real>(signal: impl Fn(T) -> T, opts: &ServoOptions<T>) -> Result<T> {
    let m = opts.modulation_depth;
    if !(m > T::zero() && m.is_finite()) {
        return Err(Error::invalid(format!("modulation depth {m} must be > 0")));
    }
    if !(opts.tolerance > T::zero()) {
        return Err(Error::invalid("servo tolerance must be > 0"));
    }
    let half = opts.bracket.unwrap_or(m);
    let error = |d: T| signal(d + m) - signal(d - m);
    let mut lo = -half;
    let mut hi = half;
    let mut e_lo = error(lo);
    let e_hi = error(hi);
    if !e_lo.is_finite() || !e_hi.is_finite() {
        return Err(Error::NoLock("error signal is not finite at the bracket ends".into()));
    }
    if e_lo == T::zero() {
        return Ok(lo);
    }
    if e_hi == T::zero() {
        return Ok(hi);
    }
    if e_lo.signum() == e_hi.signum() {
        return Err(Error::NoLock(format!(
            "error signal has the same sign at -{half} and +{half} Hz"
        )));
    }
    while hi - lo > opts.tolerance {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = error(mid);
        if e == T::zero() {
            return Ok(mid);
        }
        if e.signum() == e_lo.signum() {
            lo = mid;
            e_lo = e;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interrogation::lineshape::{ramsey_unchecked, InterrogationConfig};
    use proptest::prelude::*;

    fn fringe(d: f64) -> f64 {
        ramsey_unchecked(d, &InterrogationConfig::nominal())
    }

    #[test]
    fn symmetric_signal_locks_at_zero() {
        let z = servo_zero(fringe, 0.47).unwrap();
        assert!(z.abs() < 1e-12, "{z}");
    }

    #[test]
    fn translation() {
        let z = servo_zero(|d| fringe(d - 0.01), 0.47).unwrap();
        assert!((z - 0.01).abs() < 1e-11, "{z}");
    }

    #[test]
    fn no_lock_on_monotone_signal() {
        let e = servo_zero(|d: f64| d, 0.47).unwrap_err();
        assert!(matches!(e, Error::NoLock(_)));
    }

    #[test]
    fn invalid_depth() {
        assert!(servo_zero(fringe, 0.0).is_err());
        assert!(servo_zero(fringe, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn lock_commutes_with_translation(shift in -0.1f64..0.1) {
            let base = servo_zero(fringe, 0.47).unwrap();
            let moved = servo_zero(|d| fringe(d - shift), 0.47).unwrap();
            prop_assert!((moved - base - shift).abs() < 1e-10);
        }
    }
}
