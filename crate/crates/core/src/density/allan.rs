use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdevPoint<T> {
    pub tau_s: T,
    pub adev: T,
    /// 1σ error bar from the white-FM equivalent degrees of freedom.
    pub adev_err: T,
}

/// Overlapping Allan deviation at octave averaging factors up to N/3.
pub fn allan_deviation<T: Real>(y: &[T], tau0_s: T) -> Result<Vec<AdevPoint<T>>> {
    let n = y.len();
    if n < 3 {
        return Err(Error::invalid(format!("Allan deviation needs >= 3 samples, got {n}")));
    }
    if !(tau0_s > T::zero()) {
        return Err(Error::invalid("sample spacing must be > 0"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("frequency series contains non-finite values"));
    }
    // phase in units of tau0, offset by the first sample to keep the cumulative sum small
    let ybar = y[0];
    let mut x = Vec::with_capacity(n + 1);
    x.push(T::zero());
    let mut acc = T::zero();
    for v in y {
        acc = acc + (*v - ybar);
        x.push(acc);
    }
    let mut out = Vec::new();
    let mut m = 1usize;
    while m <= n / 3 {
        let terms = x.len() - 2 * m;
        let ss: T = (0..terms)
            .map(|i| (x[i + 2 * m] - x[i + m] * T::lit(2.0) + x[i]).powi(2))
            .sum();
        let mf = T::lit(m as f64);
        let var = ss / (T::lit(2.0) * mf * mf * T::lit(terms as f64));
        let adev = var.sqrt();
        let edf = white_fm_edf(x.len(), m);
        out.push(AdevPoint {
            tau_s: tau0_s * mf,
            adev,
            adev_err: adev / (T::lit(2.0) * T::lit(edf)).sqrt(),
        });
        m *= 2;
    }
    Ok(out)
}

/// Equivalent degrees of freedom of the overlapping estimator for white FM
/// (`n` phase points, averaging factor `m`).
fn white_fm_edf(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    let edf = (3.0 * (n - 1.0) / (2.0 * m) - 2.0 * (n - 2.0) / n) * 4.0 * m * m / (4.0 * m * m + 5.0);
    edf.max(1.0)
}

/// Least-squares `A` in `adev = A·τ^(−1/2)`, weighted by the error bars.
pub fn fit_white_fm<T: Real>(points: &[AdevPoint<T>]) -> Result<T> {
    if points.is_empty() {
        return Err(Error::invalid("no Allan deviation points to fit"));
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for p in points {
        let t = T::one() / p.tau_s.sqrt();
        let w = if p.adev_err > T::zero() {
            T::one() / (p.adev_err * p.adev_err)
        } else {
            T::one()
        };
        num = num + w * p.adev * t;
        den = den + w * t * t;
    }
    if !(den > T::zero()) {
        return Err(Error::invalid("degenerate Allan deviation fit"));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_series() {
        let a = allan_deviation(&vec![3.2e-15_f64; 100], 1.0).unwrap();
        assert!(a.iter().all(|p| p.adev == 0.0 && p.adev_err == 0.0));
        assert_eq!(a.len(), 6);
        assert_eq!(a.last().unwrap().tau_s, 32.0);
    }

    #[test]
    fn alternating_series() {
        let y: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1e-15 } else { -1e-15 }).collect();
        let a = allan_deviation(&y, 1.3).unwrap();
        assert!((a[0].adev - 1e-15 * 2f64.sqrt()).abs() < 1e-28);
        assert_eq!(a[0].tau_s, 1.3);
    }

    #[test]
    fn short_series_rejected() {
        assert!(allan_deviation(&[1.0_f64, 2.0], 1.0).is_err());
        assert!(allan_deviation(&[1.0_f64, 2.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn drift_grows_linearly() {
        let y: Vec<f64> = (0..3000).map(|i| 1e-18 * i as f64).collect();
        let a = allan_deviation(&y, 1.0).unwrap();
        for w in a.windows(2) {
            let r = w[1].adev / w[0].adev;
            assert!((r - 2.0).abs() < 1e-6, "{r}");
        }
    }

    #[test]
    fn white_fm_coefficient_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tau0 = 1.3;
        let a_true = 1.0e-13;
        let normal = Normal::new(0.0, a_true / f64::sqrt(tau0)).unwrap();
        let y: Vec<f64> = (0..20000).map(|_| normal.sample(&mut rng)).collect();
        let a = fit_white_fm(&allan_deviation(&y, tau0).unwrap()).unwrap();
        assert!((a / a_true - 1.0).abs() < 0.1, "{a:e}");
    }

    #[test]
    fn error_bars_shrink_with_data() {
        let y: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64 * 1e-16).collect();
        let a = allan_deviation(&y, 1.0).unwrap();
        assert!(a[0].adev_err < a[0].adev * 0.1);
        assert!(a.last().unwrap().adev_err / a.last().unwrap().adev > a[0].adev_err / a[0].adev);
    }
}
