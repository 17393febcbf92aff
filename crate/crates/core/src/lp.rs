use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjSense {
    Min,
    Max,
}

impl ObjSense {
    /// +1 for minimization, -1 for maximization.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            ObjSense::Min => T::one(),
            ObjSense::Max => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    /// `a x <= b`
    Le,
    /// `a x = b`
    Eq,
    /// `a x >= b`
    Ge,
}

/// A linear program in general form:
///
/// ```text
/// min/max  c^T x + offset
///   s.t.   a_i x  (<=, =, >=)  b_i   (optionally ranged)
///          l <= x <= u
/// ```
///
/// Infinite bounds are IEEE infinities. A row range follows the MPS
/// convention and turns a row into `lo <= a_i x <= hi`, see
/// [`LinearProgram::row_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub name: String,
    pub sense: ObjSense,
    pub objective: Vec<T>,
    pub obj_offset: T,
    pub matrix: SparseMatrix<T>,
    pub rhs: Vec<T>,
    pub row_senses: Vec<RowSense>,
    pub ranges: Vec<Option<T>>,
    pub col_lower: Vec<T>,
    pub col_upper: Vec<T>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

impl<T: Scalar> LinearProgram<T> {
    /// Builds a program with nonnegative variables and default names.
    pub fn new(
        sense: ObjSense,
        objective: Vec<T>,
        matrix: SparseMatrix<T>,
        row_senses: Vec<RowSense>,
        rhs: Vec<T>,
    ) -> Result<Self> {
        let n = matrix.ncols();
        let m = matrix.nrows();
        let lp = Self {
            name: String::new(),
            sense,
            objective,
            obj_offset: T::zero(),
            matrix,
            rhs,
            ranges: vec![None; row_senses.len()],
            row_senses,
            col_lower: vec![T::zero(); n],
            col_upper: vec![T::infinity(); n],
            row_names: (0..m).map(|i| format!("R{i}")).collect(),
            col_names: (0..n).map(|j| format!("C{j}")).collect(),
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn with_bounds(mut self, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        self.col_lower = lower;
        self.col_upper = upper;
        self.validate()?;
        Ok(self)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.nrows(), self.ncols());
        let lens = [
            ("objective", self.objective.len(), n),
            ("col_lower", self.col_lower.len(), n),
            ("col_upper", self.col_upper.len(), n),
            ("col_names", self.col_names.len(), n),
            ("rhs", self.rhs.len(), m),
            ("row_senses", self.row_senses.len(), m),
            ("ranges", self.ranges.len(), m),
            ("row_names", self.row_names.len(), m),
        ];
        for (what, got, want) in lens {
            if got != want {
                return Err(Error::InvalidModel(format!("{what} has length {got}, expected {want}")));
            }
        }
        for j in 0..n {
            let (l, u) = (self.col_lower[j], self.col_upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == T::infinity() || u == T::neg_infinity() {
                return Err(Error::InvalidModel(format!(
                    "column {} has bounds [{l}, {u}]",
                    self.col_names[j]
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::InvalidModel(format!("objective of {} is not finite", self.col_names[j])));
            }
        }
        for i in 0..m {
            if !self.rhs[i].is_finite() {
                return Err(Error::InvalidModel(format!("rhs of row {} is not finite", self.row_names[i])));
            }
            if let Some(r) = self.ranges[i] {
                if !r.is_finite() {
                    return Err(Error::InvalidModel(format!("range of row {} is not finite", self.row_names[i])));
                }
            }
        }
        self.matrix.validate()
    }

    /// `(lo, hi)` activity interval of row `i`, with MPS range semantics:
    /// `L` gives `[b - |R|, b]`, `G` gives `[b, b + |R|]`, `E` gives
    /// `[b, b + R]` for `R >= 0` and `[b + R, b]` otherwise.
    pub fn row_bounds(&self, i: usize) -> (T, T) {
        let b = self.rhs[i];
        let inf = T::infinity();
        match (self.row_senses[i], self.ranges[i]) {
            (RowSense::Le, None) => (-inf, b),
            (RowSense::Ge, None) => (b, inf),
            (RowSense::Eq, None) => (b, b),
            (RowSense::Le, Some(r)) => (b - r.abs(), b),
            (RowSense::Ge, Some(r)) => (b, b + r.abs()),
            (RowSense::Eq, Some(r)) if r >= T::zero() => (b, b + r),
            (RowSense::Eq, Some(r)) => (b + r, b),
        }
    }

    pub fn is_standard_form(&self) -> bool {
        self.sense == ObjSense::Min
            && self.row_senses.iter().all(|&s| s == RowSense::Eq)
            && self.ranges.iter().all(Option::is_none)
    }

    /// `c^T x + offset`, in the model's own sense.
    pub fn objective_value(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.objective, x) + self.obj_offset
    }
}
