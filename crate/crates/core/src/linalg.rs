//! Small dense linear-algebra helpers (row-major, generic scalar).

use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Matrix<T> {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v: T = (0..self.rows).map(|r| self.get(r, i) * self.get(r, j)).sum();
                *g.at_mut(i, j) = v;
                *g.at_mut(j, i) = v;
            }
        }
        g
    }

    /// `selfᵀ y`.
    pub fn t_mul_vec(&self, y: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c) * y[r]).sum())
            .collect()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn add_scaled(&self, other: &Matrix<T>, scale: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a + scale * *b)
                .collect(),
        }
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky.
/// Returns `None` when a pivot collapses below `rel_tol` of the largest diagonal.
pub fn cholesky_solve<T: Real>(a: &Matrix<T>, b: &[T], rel_tol: T) -> Option<Vec<T>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(T::zero(), T::max);
    if max_diag == T::zero() {
        return None;
    }
    let mut l: Matrix<T> = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d = d - l.get(j, k).powi(2);
        }
        if !(d > rel_tol * max_diag) {
            return None;
        }
        let d = d.sqrt();
        *l.at_mut(j, j) = d;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k);
            }
            *l.at_mut(i, j) = s / d;
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Some(x)
}

/// Ordinary least-squares straight line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_sigma: T,
    pub intercept_sigma: T,
    pub residual_rms: T,
}

/// Weighted straight-line fit; `sigmas` of `None` means unit weights with the
/// parameter errors scaled by the residual scatter.
pub fn fit_line<T: Real>(x: &[T], y: &[T], sigmas: Option<&[T]>) -> Option<LineFit<T>> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let w: Vec<T> = match sigmas {
        Some(s) if s.iter().all(|v| *v > T::zero()) => s.iter().map(|v| T::one() / (*v * *v)).collect(),
        _ => vec![T::one(); n],
    };
    let sw: T = w.iter().copied().sum();
    let sx: T = w.iter().zip(x).map(|(w, x)| *w * *x).sum();
    let sy: T = w.iter().zip(y).map(|(w, y)| *w * *y).sum();
    let xm = sx / sw;
    let ym = sy / sw;
    let sxx: T = w.iter().zip(x).map(|(w, x)| *w * (*x - xm).powi(2)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    let sxy: T = w
        .iter()
        .zip(x.iter().zip(y))
        .map(|(w, (x, y))| *w * (*x - xm) * (*y - ym))
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let resid: Vec<T> = x.iter().zip(y).map(|(x, y)| *y - intercept - slope * *x).collect();
    let ss: T = resid.iter().map(|r| *r * *r).sum();
    let residual_rms = (ss / T::lit(n as f64)).sqrt();
    let dof = if n > 2 { T::lit((n - 2) as f64) } else { T::one() };
    let (var_slope, var_icpt) = match sigmas {
        Some(s) if s.iter().all(|v| *v > T::zero()) => (T::one() / sxx, T::one() / sw + xm * xm / sxx),
        _ => {
            let s2 = if n > 2 { ss / dof } else { T::zero() };
            (s2 / sxx, s2 * (T::one() / sw + xm * xm / sxx))
        }
    };
    Some(LineFit {
        slope,
        intercept,
        slope_sigma: var_slope.sqrt(),
        intercept_sigma: var_icpt.sqrt(),
        residual_rms,
    })
}
