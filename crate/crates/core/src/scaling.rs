//! Ruiz equilibration with power-of-two factors.
//!
//! The scaled program is `A' = R A S`, `b' = R b`, `c' = S c`,
//! `l' = S^-1 l`, `u' = S^-1 u`. A primal point maps back as `x = S x'`,
//! duals as `y = R y'` and `z = S^-1 z'`. Because every factor is a power of
//! two, scaling and unscaling are exact in floating point.

use crate::kkt::Iterate;
use crate::lp::LinearProgram;
use crate::scalar::Scalar;

pub const DEFAULT_RUIZ_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingInfo<T> {
    pub row: Vec<T>,
    pub col: Vec<T>,
}

/// Nearest power of two to `v` in the log domain.
fn pow2_round<T: Scalar>(v: T) -> T {
    if !v.is_finite() || v <= T::zero() {
        return T::one();
    }
    T::lit(2.0).powi(v.log2().round().to_i32().unwrap_or(0))
}

pub fn ruiz_scale<T: Scalar>(lp: &LinearProgram<T>, iterations: usize) -> (LinearProgram<T>, ScalingInfo<T>) {
    let m = lp.nrows();
    let n = lp.ncols();
    let mut row = vec![T::one(); m];
    let mut col = vec![T::one(); n];
    let mut a = lp.matrix.clone();

    for _ in 0..iterations {
        let mut changed = false;

        let rmax = a.row_max_abs();
        let rf: Vec<T> = rmax
            .iter()
            .map(|&v| if v > T::zero() { pow2_round(T::one() / v.sqrt()) } else { T::one() })
            .collect();
        if rf.iter().any(|&f| f != T::one()) {
            changed = true;
            a = a.scaled(&rf, &vec![T::one(); n]);
            row.iter_mut().zip(&rf).for_each(|(r, &f)| *r *= f);
        }

        let cmax = a.col_max_abs();
        let cf: Vec<T> = cmax
            .iter()
            .map(|&v| if v > T::zero() { pow2_round(T::one() / v.sqrt()) } else { T::one() })
            .collect();
        if cf.iter().any(|&f| f != T::one()) {
            changed = true;
            a = a.scaled(&vec![T::one(); m], &cf);
            col.iter_mut().zip(&cf).for_each(|(c, &f)| *c *= f);
        }

        if !changed {
            break;
        }
    }

    let info = ScalingInfo { row, col };
    let scaled = info.apply_with_matrix(lp, a);
    (scaled, info)
}

impl<T: Scalar> ScalingInfo<T> {
    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            row: vec![T::one(); m],
            col: vec![T::one(); n],
        }
    }

    fn apply_with_matrix(&self, lp: &LinearProgram<T>, matrix: crate::sparse::SparseMatrix<T>) -> LinearProgram<T> {
        let mut out = lp.clone();
        out.matrix = matrix;
        for (i, r) in self.row.iter().enumerate() {
            out.rhs[i] = lp.rhs[i] * *r;
            out.ranges[i] = lp.ranges[i].map(|v| v * *r);
        }
        for (j, s) in self.col.iter().enumerate() {
            out.objective[j] = lp.objective[j] * *s;
            out.col_lower[j] = lp.col_lower[j] / *s;
            out.col_upper[j] = lp.col_upper[j] / *s;
        }
        out
    }

    pub fn apply(&self, lp: &LinearProgram<T>) -> LinearProgram<T> {
        self.apply_with_matrix(lp, lp.matrix.scaled(&self.row, &self.col))
    }

    /// Inverse of [`Self::apply`].
    pub fn unapply(&self, scaled: &LinearProgram<T>) -> LinearProgram<T> {
        let inv_r: Vec<T> = self.row.iter().map(|&r| T::one() / r).collect();
        let inv_s: Vec<T> = self.col.iter().map(|&s| T::one() / s).collect();
        let mut out = scaled.clone();
        out.matrix = scaled.matrix.scaled(&inv_r, &inv_s);
        for i in 0..self.row.len() {
            out.rhs[i] = scaled.rhs[i] * inv_r[i];
            out.ranges[i] = scaled.ranges[i].map(|v| v * inv_r[i]);
        }
        for j in 0..self.col.len() {
            out.objective[j] = scaled.objective[j] * inv_s[j];
            out.col_lower[j] = scaled.col_lower[j] * self.col[j];
            out.col_upper[j] = scaled.col_upper[j] * self.col[j];
        }
        out
    }

    pub fn unscale_primal(&self, x_scaled: &[T]) -> Vec<T> {
        x_scaled.iter().zip(&self.col).map(|(&x, &s)| x * s).collect()
    }

    pub fn scale_primal(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.col).map(|(&x, &s)| x / s).collect()
    }

    pub fn unscale_dual(&self, y_scaled: &[T], z_scaled: &[T]) -> (Vec<T>, Vec<T>) {
        (
            y_scaled.iter().zip(&self.row).map(|(&y, &r)| y * r).collect(),
            z_scaled.iter().zip(&self.col).map(|(&z, &s)| z / s).collect(),
        )
    }

    pub fn scale_dual(&self, y: &[T], z: &[T]) -> (Vec<T>, Vec<T>) {
        (
            y.iter().zip(&self.row).map(|(&y, &r)| y / r).collect(),
            z.iter().zip(&self.col).map(|(&z, &s)| z * s).collect(),
        )
    }

    pub fn unscale_iterate(&self, it: &Iterate<T>) -> Iterate<T> {
        let (y, z) = self.unscale_dual(&it.y, &it.z);
        Iterate {
            x: self.unscale_primal(&it.x),
            y,
            z,
            k: it.k,
        }
    }
}
