//! Conversion of a general LP to the equality form the solvers work on:
//! `min c^T x  s.t.  A x = b,  l <= x <= u`.
//!
//! Every non-equality row gets one slack column with coefficient `+1`:
//!
//! | row interval      | standard rhs | slack bounds      |
//! |-------------------|--------------|-------------------|
//! | `(-inf, hi]`      | `hi`         | `[0, +inf)`       |
//! | `[lo, +inf)`      | `lo`         | `(-inf, 0]`       |
//! | `[lo, hi]`        | `hi`         | `[0, hi - lo]`    |
//!
//! Maximization is turned into minimization by negating `c`; duals are
//! negated back on the way out.

use crate::error::{check_len, Result};
use crate::kkt::Iterate;
use crate::lp::{LinearProgram, ObjSense, RowSense};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct StandardFormMap<T> {
    /// The derived equality-form program.
    pub lp: LinearProgram<T>,
    original_cols: usize,
    /// Slack column index for each original row, if it has one.
    slack_of_row: Vec<Option<usize>>,
    negated: bool,
    obj_offset: T,
}

pub fn to_standard_form<T: Scalar>(lp: &LinearProgram<T>) -> StandardFormMap<T> {
    let m = lp.nrows();
    let n = lp.ncols();
    let negated = lp.sense == ObjSense::Max;
    let flip = |v: T| if negated { -v } else { v };

    let mut objective: Vec<T> = lp.objective.iter().map(|&c| flip(c)).collect();
    let mut lower = lp.col_lower.clone();
    let mut upper = lp.col_upper.clone();
    let mut col_names = lp.col_names.clone();
    let mut rhs = Vec::with_capacity(m);
    let mut slack_cols = Vec::new();
    let mut slack_of_row = vec![None; m];

    let inf = T::infinity();
    for i in 0..m {
        let (lo, hi) = lp.row_bounds(i);
        if lo == hi {
            rhs.push(lo);
            continue;
        }
        let (b, sl, su) = if hi.is_finite() {
            let width = if lo.is_finite() { hi - lo } else { inf };
            (hi, T::zero(), width)
        } else if lo.is_finite() {
            (lo, -inf, T::zero())
        } else {
            (T::zero(), -inf, inf)
        };
        rhs.push(b);
        slack_of_row[i] = Some(n + slack_cols.len());
        slack_cols.push(vec![(i, T::one())]);
        objective.push(T::zero());
        lower.push(sl);
        upper.push(su);
        col_names.push(format!("slack:{}", lp.row_names[i]));
    }

    let matrix = if slack_cols.is_empty() {
        lp.matrix.clone()
    } else {
        lp.matrix.with_appended_columns(&slack_cols)
    };
    let std_lp = LinearProgram {
        name: lp.name.clone(),
        sense: ObjSense::Min,
        objective,
        obj_offset: flip(lp.obj_offset),
        matrix,
        rhs,
        row_senses: vec![RowSense::Eq; m],
        ranges: vec![None; m],
        col_lower: lower,
        col_upper: upper,
        row_names: lp.row_names.clone(),
        col_names,
    };
    StandardFormMap {
        lp: std_lp,
        original_cols: n,
        slack_of_row,
        negated,
        obj_offset: lp.obj_offset,
    }
}

impl<T: Scalar> StandardFormMap<T> {
    pub fn original_cols(&self) -> usize {
        self.original_cols
    }

    pub fn slack_of_row(&self, i: usize) -> Option<usize> {
        self.slack_of_row[i]
    }

    pub fn num_slacks(&self) -> usize {
        self.lp.ncols() - self.original_cols
    }

    pub fn is_identity(&self) -> bool {
        self.num_slacks() == 0 && !self.negated
    }

    /// Extends an original primal vector with slack values `b - A x`.
    pub fn map_primal(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("map_primal", self.original_cols, x.len())?;
        let mut out = x.to_vec();
        out.resize(self.lp.ncols(), T::zero());
        if self.num_slacks() > 0 {
            let mut padded = out.clone();
            for v in padded.iter_mut().skip(self.original_cols) {
                *v = T::zero();
            }
            let ax = self.lp.matrix.matvec(&padded)?;
            for (i, s) in self.slack_of_row.iter().enumerate() {
                if let Some(j) = *s {
                    out[j] = self.lp.rhs[i] - ax[i];
                }
            }
        }
        Ok(out)
    }

    /// Drops slack values.
    pub fn unmap_primal(&self, x_std: &[T]) -> Result<Vec<T>> {
        check_len("unmap_primal", self.lp.ncols(), x_std.len())?;
        Ok(x_std[..self.original_cols].to_vec())
    }

    /// Maps original duals `(y, z)` to standard-form duals. Slack reduced
    /// costs are `0 - 1 * y_i`.
    pub fn map_dual(&self, y: &[T], z: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        check_len("map_dual y", self.lp.nrows(), y.len())?;
        check_len("map_dual z", self.original_cols, z.len())?;
        let flip = |v: T| if self.negated { -v } else { v };
        let y_std: Vec<T> = y.iter().map(|&v| flip(v)).collect();
        let mut z_std: Vec<T> = z.iter().map(|&v| flip(v)).collect();
        z_std.resize(self.lp.ncols(), T::zero());
        for (i, s) in self.slack_of_row.iter().enumerate() {
            if let Some(j) = *s {
                z_std[j] = -y_std[i];
            }
        }
        Ok((y_std, z_std))
    }

    pub fn unmap_dual(&self, y_std: &[T], z_std: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        check_len("unmap_dual y", self.lp.nrows(), y_std.len())?;
        check_len("unmap_dual z", self.lp.ncols(), z_std.len())?;
        let flip = |v: T| if self.negated { -v } else { v };
        Ok((
            y_std.iter().map(|&v| flip(v)).collect(),
            z_std[..self.original_cols].iter().map(|&v| flip(v)).collect(),
        ))
    }

    pub fn map_iterate(&self, it: &Iterate<T>) -> Result<Iterate<T>> {
        let x = self.map_primal(&it.x)?;
        let (y, z) = self.map_dual(&it.y, &it.z)?;
        Ok(Iterate { x, y, z, k: it.k })
    }

    pub fn unmap_iterate(&self, it: &Iterate<T>) -> Result<Iterate<T>> {
        let x = self.unmap_primal(&it.x)?;
        let (y, z) = self.unmap_dual(&it.y, &it.z)?;
        Ok(Iterate { x, y, z, k: it.k })
    }

    /// Objective of the original model (sense and offset restored) from a
    /// standard-form objective value that excludes the offset.
    pub fn unmap_objective(&self, std_value_without_offset: T) -> T {
        let v = if self.negated {
            -std_value_without_offset
        } else {
            std_value_without_offset
        };
        v + self.obj_offset
    }
}
