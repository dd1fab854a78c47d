use crate::error::{Error, Result};
use crate::scalar::Real;

/// RMS difference of two peak-normalised time-of-flight traces.
pub fn tof_nonlinearity<T: Real>(profile_h: &[T], profile_l: &[T]) -> Result<T> {
    if profile_h.len() != profile_l.len() {
        return Err(Error::invalid(format!(
            "TOF traces differ in length ({} vs {})",
            profile_h.len(),
            profile_l.len()
        )));
    }
    if profile_h.is_empty() {
        return Err(Error::invalid("TOF traces are empty"));
    }
    let peak = |v: &[T]| v.iter().copied().fold(T::zero(), |m, x| m.max(x.abs()));
    let (ph, pl) = (peak(profile_h), peak(profile_l));
    if !(ph > T::zero() && pl > T::zero()) || !ph.is_finite() || !pl.is_finite() {
        return Err(Error::invalid("TOF trace is all zero or non-finite"));
    }
    let ss: T = profile_h
        .iter()
        .zip(profile_l)
        .map(|(h, l)| (*h / ph - *l / pl).powi(2))
        .sum();
    Ok((ss / T::lit(profile_h.len() as f64)).sqrt())
}
