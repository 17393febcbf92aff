//! Compressed sparse column storage and the two products every solver in the
//! crate is built on: `A x` and `A^T y`.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Column-major compressed sparse matrix.
///
/// Invariants (checked by [`SparseMatrix::validate`]): `col_ptr` has
/// `ncols + 1` nondecreasing entries, row indices inside a column are strictly
/// increasing and `< nrows`, and no stored value is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from raw CSC arrays, rejecting anything that violates the
    /// storage invariants.
    pub fn from_csc(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let m = Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, T)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidModel(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite coefficient at ({r}, {c})")));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|a| (a.1, a.0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            i += 1;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != T::zero() {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Row-major dense input, mostly for tests and small examples.
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip).expect("dense input is always valid")
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.col_ptr.len() != self.ncols + 1 {
            return bad(format!("col_ptr has {} entries for {} columns", self.col_ptr.len(), self.ncols));
        }
        if self.col_ptr[0] != 0 || self.col_ptr[self.ncols] != self.row_idx.len() {
            return bad("col_ptr endpoints do not span the index array".into());
        }
        if self.row_idx.len() != self.values.len() {
            return bad("row index and value arrays differ in length".into());
        }
        for j in 0..self.ncols {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            if s > e {
                return bad(format!("col_ptr decreases at column {j}"));
            }
            for k in s..e {
                if self.row_idx[k] >= self.nrows {
                    return bad(format!("row index {} out of range in column {j}", self.row_idx[k]));
                }
                if k > s && self.row_idx[k] <= self.row_idx[k - 1] {
                    return bad(format!("row indices not strictly increasing in column {j}"));
                }
                if self.values[k] == T::zero() {
                    return bad(format!("explicit zero stored in column {j}"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Iterates the nonzeros of column `j` as `(row, value)`.
    #[inline]
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    #[inline]
    pub fn col_dot(&self, j: usize, y: &[T]) -> T {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        let mut acc = T::zero();
        for k in s..e {
            acc += self.values[k] * y[self.row_idx[k]];
        }
        acc
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        match self.row_idx[s..e].binary_search(&i) {
            Ok(k) => self.values[s + k],
            Err(_) => T::zero(),
        }
    }

    /// `A x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("matvec input", self.ncols, x.len())?;
        let mut out = vec![T::zero(); self.nrows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// `A^T y`.
    pub fn matvec_transpose(&self, y: &[T]) -> Result<Vec<T>> {
        check_len("matvec_transpose input", self.nrows, y.len())?;
        let mut out = vec![T::zero(); self.ncols];
        self.matvec_transpose_into(y, &mut out);
        Ok(out)
    }

    /// `out = A x` without allocation. Lengths are the caller's problem.
    pub(crate) fn matvec_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    pub(crate) fn matvec_transpose_into(&self, y: &[T], out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.col_dot(j, y);
        }
    }

    /// Column-parallel `A^T y`. Each output entry is one column dot product
    /// with a fixed summation order, so the result is bit-identical to
    /// [`Self::matvec_transpose_into`] regardless of thread count.
    pub(crate) fn par_matvec_transpose_into(&self, y: &[T], out: &mut [T]) {
        out.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(j, o)| *o = self.col_dot(j, y));
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                d[i][j] = v;
            }
        }
        d
    }

    /// Returns a copy with `A[i][j] * row[i] * col[j]`. Entries that
    /// underflow to zero are dropped to keep the storage invariant.
    pub fn scaled(&self, row: &[T], col: &[T]) -> Self {
        let mut out = Self::zeros(self.nrows, self.ncols);
        out.row_idx.reserve(self.nnz());
        out.values.reserve(self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                let s = v * row[i] * col[j];
                if s != T::zero() {
                    out.row_idx.push(i);
                    out.values.push(s);
                }
            }
            out.col_ptr[j + 1] = out.row_idx.len();
        }
        out
    }

    /// Appends columns given as sparse `(row, value)` lists.
    pub(crate) fn with_appended_columns(&self, cols: &[Vec<(usize, T)>]) -> Self {
        let mut out = self.clone();
        for c in cols {
            for &(i, v) in c {
                debug_assert!(i < self.nrows);
                if v != T::zero() {
                    out.row_idx.push(i);
                    out.values.push(v);
                }
            }
            out.col_ptr.push(out.row_idx.len());
            out.ncols += 1;
        }
        out
    }

    pub fn row_max_abs(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.nrows];
        for (k, &i) in self.row_idx.iter().enumerate() {
            m[i] = m[i].max(self.values[k].abs());
        }
        m
    }

    pub fn col_max_abs(&self) -> Vec<T> {
        (0..self.ncols)
            .map(|j| self.col(j).fold(T::zero(), |acc, (_, v)| acc.max(v.abs())))
            .collect()
    }

    pub fn col_norm2(&self, j: usize) -> T {
        self.col(j).fold(T::zero(), |acc, (_, v)| acc + v * v).sqrt()
    }

    /// Max absolute row sum, `‖A‖∞`.
    pub fn norm_inf(&self) -> T {
        let mut sums = vec![T::zero(); self.nrows];
        for (k, &i) in self.row_idx.iter().enumerate() {
            sums[i] += self.values[k].abs();
        }
        sums.into_iter().fold(T::zero(), T::max)
    }
}
