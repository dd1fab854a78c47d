//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Caesium ground-state hyperfine (clock) transition frequency, Hz.
pub const CLOCK_FREQUENCY_HZ: f64 = 9_192_631_770.0;

/// Seconds per day, used for MJD interval arithmetic.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Floating-point scalar the evaluation routines are generic over.
///
/// Implemented for `f32` and `f64`. Anything that needs sub-1e-15 relative
/// resolution (servo lock points, Bloch integration) is only meaningful in
/// `f64`; the closed-form shift formulas work in either.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clock frequency f0 in this scalar type.
    #[inline]
    fn clock_frequency() -> Self {
        Self::lit(CLOCK_FREQUENCY_HZ)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Root-sum-square of an iterator, without validation.
pub(crate) fn hypot_all<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    // scale by the largest magnitude so tiny (1e-18) entries do not underflow when squared in f32
    let v: Vec<T> = values.into_iter().collect();
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let sum: T = v.iter().map(|x| (*x / scale).powi(2)).sum();
    scale * sum.sqrt()
}

pub(crate) fn mean<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::nan();
    }
    values.iter().copied().sum::<T>() / T::lit(values.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub(crate) fn sample_std<T: Real>(values: &[T]) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let m = mean(values);
    let ss: T = values.iter().map(|x| (*x - m).powi(2)).sum();
    (ss / T::lit((values.len() - 1) as f64)).sqrt()
}
