use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Axial C-field magnitude sampled above the optical-molasses centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMap<T> {
    z_mm: Vec<T>,
    b_nt: Vec<T>,
}

impl<T: Real> FieldMap<T> {
    pub fn new(z_mm: Vec<T>, b_nt: Vec<T>) -> Result<Self> {
        if z_mm.len() != b_nt.len() {
            return Err(Error::invalid("field map grid and values differ in length"));
        }
        if z_mm.len() < 2 {
            return Err(Error::invalid("field map needs at least two grid points"));
        }
        if z_mm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("field map grid must be strictly increasing"));
        }
        // a zero crossing would drive Majorana transitions; the map must stay positive
        if b_nt.iter().any(|b| !(*b > T::zero()) || !b.is_finite()) {
            return Err(Error::invalid("field map values must be finite and > 0"));
        }
        Ok(Self { z_mm, b_nt })
    }

    /// Uniform map on `[z0, z1]` with `n` nodes.
    pub fn uniform(z0: T, z1: T, n: usize, b_nt: T) -> Result<Self> {
        let z = linspace(z0, z1, n);
        Self::new(z, vec![b_nt; n])
    }

    /// Samples `f` on `n` equally spaced nodes of `[z0, z1]`.
    pub fn from_fn(z0: T, z1: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let z = linspace(z0, z1, n);
        let b = z.iter().map(|z| f(*z)).collect();
        Self::new(z, b)
    }

    pub fn z_mm(&self) -> &[T] {
        &self.z_mm
    }

    pub fn b_nt(&self) -> &[T] {
        &self.b_nt
    }

    pub fn z_range(&self) -> (T, T) {
        (self.z_mm[0], self.z_mm[self.z_mm.len() - 1])
    }

    pub fn contains(&self, z: T) -> bool {
        let (lo, hi) = self.z_range();
        z >= lo && z <= hi
    }

    /// Index `i` of the cell `[z_i, z_{i+1}]` holding `z` and the fractional position in it.
    pub(crate) fn locate(&self, z: T) -> Option<(usize, T)> {
        if !self.contains(z) {
            return None;
        }
        let n = self.z_mm.len();
        let i = match self.z_mm.binary_search_by(|p| p.partial_cmp(&z).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let frac = (z - self.z_mm[i]) / (self.z_mm[i + 1] - self.z_mm[i]);
        Some((i, frac))
    }

    /// Linearly interpolated field.
    pub fn field_at(&self, z_mm: T) -> Result<T> {
        let (i, f) = self.locate(z_mm).ok_or_else(|| {
            let (lo, hi) = self.z_range();
            Error::OutOfRange(format!("z = {z_mm} mm outside field map [{lo}, {hi}]"))
        })?;
        Ok(self.b_nt[i] * (T::one() - f) + self.b_nt[i + 1] * f)
    }

    /// Peak-to-peak field on `[z0, z1]` (grid nodes plus interpolated ends).
    pub fn peak_to_peak(&self, z0: T, z1: T) -> Result<T> {
        let mut vals = vec![self.field_at(z0)?, self.field_at(z1)?];
        vals.extend(
            self.z_mm
                .iter()
                .zip(&self.b_nt)
                .filter(|(z, _)| **z >= z0 && **z <= z1)
                .map(|(_, b)| *b),
        );
        let hi = vals.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = vals.iter().copied().fold(T::infinity(), T::min);
        Ok(hi - lo)
    }
}

pub(crate) fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / T::lit((n - 1) as f64);
    (0..n).map(|i| a + step * T::lit(i as f64)).collect()
}

/// Ballistic flight geometry for the above-cavity arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kinematics<T> {
    /// Local gravity, m/s².
    pub g: T,
    /// Lower end of the averaging arc (Ramsey cavity), mm above the OM centre.
    pub reference_mm: T,
    /// Quadrature intervals along the half-arc.
    pub quadrature_steps: usize,
}

impl<T: Real> Kinematics<T> {
    pub fn new(g: T, reference_mm: T) -> Self {
        Self {
            g,
            reference_mm,
            quadrature_steps: 2000,
        }
    }

    fn g_mm(&self) -> T {
        self.g * T::lit(1000.0)
    }

    /// Free-evolution time above the reference for an apogee, s.
    pub fn time_above_reference(&self, apogee_mm: T) -> T {
        let two = T::lit(2.0);
        two * (two * (apogee_mm - self.reference_mm).max(T::zero()) / self.g_mm()).sqrt()
    }

    /// Heights and trapezoid weights (summing to one) along the half-arc from
    /// the apogee down to the reference, uniform in time.
    pub(crate) fn arc_nodes(&self, apogee_mm: T) -> Vec<(T, T)> {
        let n = self.quadrature_steps.max(1);
        let half = T::lit(0.5);
        let s_max = (T::lit(2.0) * (apogee_mm - self.reference_mm) / self.g_mm()).sqrt();
        if !(s_max > T::zero()) {
            return vec![(apogee_mm, T::one())];
        }
        let ds = s_max / T::lit(n as f64);
        let w_end = half / T::lit(n as f64);
        let w_mid = T::one() / T::lit(n as f64);
        (0..=n)
            .map(|k| {
                let s = ds * T::lit(k as f64);
                let z = (apogee_mm - half * self.g_mm() * s * s).max(self.reference_mm);
                let w = if k == 0 || k == n { w_end } else { w_mid };
                (z, w)
            })
            .collect()
    }

    fn validate_arc(&self, map: &FieldMap<T>, apogee_mm: T) -> Result<()> {
        if !(self.g > T::zero()) {
            return Err(Error::invalid("gravity must be positive"));
        }
        if apogee_mm < self.reference_mm {
            return Err(Error::OutOfRange(format!(
                "apogee {apogee_mm} mm below the reference height {} mm",
                self.reference_mm
            )));
        }
        if !map.contains(apogee_mm) || !map.contains(self.reference_mm) {
            let (lo, hi) = map.z_range();
            return Err(Error::OutOfRange(format!(
                "arc [{}, {apogee_mm}] mm not inside field map [{lo}, {hi}]",
                self.reference_mm
            )));
        }
        Ok(())
    }
}

/// Time average of B(z(t)) over the arc above the reference height.
pub fn time_averaged_field<T: Real>(map: &FieldMap<T>, apogee_mm: T, kin: &Kinematics<T>) -> Result<T> {
    Ok(trajectory_field_stats(map, apogee_mm, kin)?.mean_nt)
}

/// Time-weighted field statistics along one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats<T> {
    pub mean_nt: T,
    /// Standard deviation of B along the arc (time weighted).
    pub sigma_nt: T,
    pub peak_to_peak_nt: T,
}

pub fn trajectory_field_stats<T: Real>(
    map: &FieldMap<T>,
    apogee_mm: T,
    kin: &Kinematics<T>,
) -> Result<TrajectoryStats<T>> {
    kin.validate_arc(map, apogee_mm)?;
    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for (z, w) in kin.arc_nodes(apogee_mm) {
        let b = map.field_at(z)?;
        m1 = m1 + w * b;
        m2 = m2 + w * b * b;
    }
    let var = (m2 - m1 * m1).max(T::zero());
    Ok(TrajectoryStats {
        mean_nt: m1,
        sigma_nt: var.sqrt(),
        peak_to_peak_nt: map.peak_to_peak(kin.reference_mm, apogee_mm)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kin() -> Kinematics<f64> {
        Kinematics::new(9.801, 532.0)
    }

    #[test]
    fn map_validation() {
        assert!(FieldMap::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(FieldMap::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(FieldMap::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(FieldMap::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(FieldMap::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn interpolation() {
        let m = FieldMap::new(vec![0.0, 10.0, 20.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(m.field_at(5.0).unwrap(), 2.0);
        assert_eq!(m.field_at(20.0).unwrap(), 2.0);
        assert_eq!(m.field_at(0.0).unwrap(), 1.0);
        assert!(matches!(m.field_at(21.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn uniform_map_average() {
        let m = FieldMap::uniform(0.0, 1000.0, 101, 125.2).unwrap();
        for h in [540.0, 700.0, 850.0, 999.0] {
            let b = time_averaged_field(&m, h, &kin()).unwrap();
            assert!((b - 125.2).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_map_matches_parabola_average() {
        // along a ballistic arc the time-averaged height is apogee - (apogee - z_c)/3
        let (a, c) = (120.0, 0.01);
        let m = FieldMap::from_fn(0.0, 1000.0, 11, |z| a + c * z).unwrap();
        for h in [600.0, 850.0, 990.0] {
            let expected = a + c * (h - (h - 532.0) / 3.0);
            let got = time_averaged_field(&m, h, &kin()).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-6, "{h}: {got} vs {expected}");
        }
    }

    #[test]
    fn apogee_outside_grid() {
        let m = FieldMap::uniform(500.0, 800.0, 31, 100.0).unwrap();
        assert!(matches!(
            time_averaged_field(&m, 850.0, &kin()),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            time_averaged_field(&m, 520.0, &kin()),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn apogee_at_reference_is_point_value() {
        let m = FieldMap::from_fn(0.0, 1000.0, 101, |z| 100.0 + 0.01 * z).unwrap();
        assert!((time_averaged_field(&m, 532.0, &kin()).unwrap() - 105.32).abs() < 1e-9);
    }

    #[test]
    fn stats_of_linear_map() {
        let m = FieldMap::from_fn(0.0, 1000.0, 101, |z| 100.0 + 0.01 * z).unwrap();
        let s = trajectory_field_stats(&m, 850.0, &kin()).unwrap();
        // z along the arc: u = (h - z) = (h - z_c) s², s uniform on [0,1]; var(s²) = 4/45
        let expected = 0.01 * (850.0 - 532.0) * (4.0f64 / 45.0).sqrt();
        assert!(
            (s.sigma_nt - expected).abs() < 1e-3 * expected,
            "{} vs {expected}",
            s.sigma_nt
        );
        assert!((s.peak_to_peak_nt - 3.18).abs() < 1e-9);
    }

    #[test]
    fn time_above_reference() {
        let k = Kinematics::new(9.801f64, 532.0);
        let t = k.time_above_reference(857.0);
        assert!((t - 0.515).abs() < 0.002, "{t}");
    }
}
