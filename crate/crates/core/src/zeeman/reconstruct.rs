use serde::{Deserialize, Serialize};

use super::field_map::{FieldMap, Kinematics};
use super::ZeemanConstants;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::scalar::Real;

/// One launch height and its |3,1⟩↔|4,1⟩ fringe, stored as the offset from f0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint<T> {
    pub height_mm: T,
    pub fringe_hz: T,
}

/// Launch-height scan of the field-sensitive fringe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaunchScan<T> {
    entries: Vec<ScanPoint<T>>,
}

impl<T: Real> LaunchScan<T> {
    pub fn new(entries: Vec<ScanPoint<T>>) -> Result<Self> {
        if entries.windows(2).any(|w| !(w[1].height_mm > w[0].height_mm)) {
            return Err(Error::invalid("launch heights must be strictly increasing"));
        }
        if entries
            .iter()
            .any(|e| !(e.fringe_hz > T::zero()) || !e.fringe_hz.is_finite())
        {
            return Err(Error::invalid("fringe offsets must be finite and above f0"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ScanPoint<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn heights(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.height_mm).collect()
    }

    /// Forward model: the scan a given map would produce.
    pub fn from_map(
        map: &FieldMap<T>,
        heights_mm: &[T],
        kin: &Kinematics<T>,
        constants: &ZeemanConstants<T>,
    ) -> Result<Self> {
        let entries = heights_mm
            .iter()
            .map(|h| {
                let b = super::time_averaged_field(map, *h, kin)?;
                Ok(ScanPoint {
                    height_mm: *h,
                    fringe_hz: constants.fringe_from_field(b),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

/// Tuning of the regularised deconvolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions<T> {
    /// Forward-residual RMS the regularisation weight is tuned to, nT.
    pub target_residual_nt: T,
    /// Fixed weight instead of the discrepancy search.
    pub lambda: Option<T>,
    pub constants: ZeemanConstants<T>,
}

impl<T: Real> Default for ReconstructionOptions<T> {
    fn default() -> Self {
        Self {
            target_residual_nt: T::lit(0.1),
            lambda: None,
            constants: ZeemanConstants::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldReconstruction<T> {
    pub map: FieldMap<T>,
    pub lambda: T,
    pub residual_rms_nt: T,
}

/// Forward matrix on the hat basis of `nodes`: row i holds the time-average
/// weights of each node for apogee `heights[i]`.
fn forward_matrix<T: Real>(nodes: &[T], heights: &[T], kin: &Kinematics<T>) -> Result<Matrix<T>> {
    let probe = FieldMap::new(nodes.to_vec(), vec![T::one(); nodes.len()])?;
    let mut a = Matrix::zeros(heights.len(), nodes.len());
    for (i, h) in heights.iter().enumerate() {
        for (z, w) in kin.arc_nodes(*h) {
            let (j, f) = probe
                .locate(z)
                .ok_or_else(|| Error::OutOfRange(format!("arc height {z} mm outside reconstruction grid")))?;
            *a.at_mut(i, j) = a.get(i, j) + w * (T::one() - f);
            *a.at_mut(i, j + 1) = a.get(i, j + 1) + w * f;
        }
    }
    Ok(a)
}

/// Second-difference penalty `DᵀD` on a nonuniform grid.
fn curvature_penalty<T: Real>(nodes: &[T]) -> Matrix<T> {
    let n = nodes.len();
    let mut p = Matrix::zeros(n, n);
    let two = T::lit(2.0);
    for k in 1..n.saturating_sub(1) {
        let h0 = nodes[k] - nodes[k - 1];
        let h1 = nodes[k + 1] - nodes[k];
        let s = h0 + h1;
        let row = [(k - 1, two / (h0 * s)), (k, -two / (h0 * h1)), (k + 1, two / (h1 * s))];
        for (a, va) in row {
            for (b, vb) in row {
                *p.at_mut(a, b) = p.get(a, b) + va * vb;
            }
        }
    }
    p
}

struct Solve<T> {
    b: Vec<T>,
    residual_rms: T,
}

fn solve_at<T: Real>(
    gram: &Matrix<T>,
    penalty: &Matrix<T>,
    rhs: &[T],
    a: &Matrix<T>,
    y: &[T],
    lambda: T,
) -> Result<Solve<T>> {
    let m = gram.add_scaled(penalty, lambda);
    let b = cholesky_solve(&m, rhs, T::lit(1e-13))
        .ok_or_else(|| Error::Reconstruction(format!("normal equations singular at lambda = {lambda:e}")))?;
    let pred = a.mul_vec(&b);
    let ss: T = pred.iter().zip(y).map(|(p, y)| (*p - *y).powi(2)).sum();
    Ok(Solve {
        b,
        residual_rms: (ss / T::lit(y.len() as f64)).sqrt(),
    })
}

/// Deconvolves a launch-height scan into B(z) between the reference height and
/// the highest apogee by second-difference Tikhonov regularisation.
pub fn reconstruct_field_map<T: Real>(
    scan: &LaunchScan<T>,
    kin: &Kinematics<T>,
    opts: &ReconstructionOptions<T>,
) -> Result<FieldReconstruction<T>> {
    if scan.len() < 2 {
        return Err(Error::invalid("field reconstruction needs at least two launch heights"));
    }
    opts.constants.validate()?;
    let heights = scan.heights();
    if heights[0] < kin.reference_mm {
        return Err(Error::OutOfRange(format!(
            "launch height {} mm below the reference height {} mm",
            heights[0], kin.reference_mm
        )));
    }
    let y: Vec<T> = scan
        .entries()
        .iter()
        .map(|e| opts.constants.field_from_fringe(e.fringe_hz))
        .collect::<Result<_>>()?;

    let mut nodes = vec![kin.reference_mm];
    nodes.extend(heights.iter().copied().filter(|h| *h > kin.reference_mm));
    if nodes.len() < 2 {
        return Err(Error::Reconstruction(
            "scan does not extend above the reference height".into(),
        ));
    }

    let a = forward_matrix(&nodes, &heights, kin)?;
    let gram = a.gram();
    let penalty = curvature_penalty(&nodes);
    let rhs = a.t_mul_vec(&y);
    let pen_trace = penalty.trace();
    let scale = if pen_trace > T::zero() {
        gram.trace() / pen_trace
    } else {
        T::one()
    };

    let (lambda, sol) = match opts.lambda {
        Some(l) => {
            if !(l >= T::zero()) {
                return Err(Error::invalid("regularisation weight must be >= 0"));
            }
            (l, solve_at(&gram, &penalty, &rhs, &a, &y, l)?)
        }
        None => discrepancy_search(&gram, &penalty, &rhs, &a, &y, scale, opts.target_residual_nt)?,
    };

    if sol.b.iter().any(|b| !b.is_finite()) {
        return Err(Error::Reconstruction("non-finite field estimate".into()));
    }
    if sol.b.iter().any(|b| !(*b > T::zero())) {
        return Err(Error::Reconstruction("reconstructed field crosses zero".into()));
    }
    Ok(FieldReconstruction {
        map: FieldMap::new(nodes, sol.b)?,
        lambda,
        residual_rms_nt: sol.residual_rms,
    })
}

/// Largest weight whose forward residual stays at or below `target`, by
/// bisection in log λ.
fn discrepancy_search<T: Real>(
    gram: &Matrix<T>,
    penalty: &Matrix<T>,
    rhs: &[T],
    a: &Matrix<T>,
    y: &[T],
    scale: T,
    target: T,
) -> Result<(T, Solve<T>)> {
    if !(target > T::zero()) {
        return Err(Error::invalid("target residual must be > 0"));
    }
    let ten = T::lit(10.0);
    let mut lo = T::lit(-10.0);
    let mut hi = T::lit(8.0);
    let at = |e: T| {
        let l = scale * ten.powf(e);
        solve_at(gram, penalty, rhs, a, y, l).map(|s| (l, s))
    };
    let low = at(lo)?;
    if low.1.residual_rms > target {
        return Ok(low);
    }
    let high = at(hi)?;
    if high.1.residual_rms <= target {
        return Ok(high);
    }
    let mut best = low;
    for _ in 0..60 {
        let mid = (lo + hi) / T::lit(2.0);
        let cand = at(mid)?;
        if cand.1.residual_rms <= target {
            lo = mid;
            best = cand;
        } else {
            hi = mid;
        }
        if hi - lo < T::lit(1e-4) {
            break;
        }
    }
    Ok(best)
}
