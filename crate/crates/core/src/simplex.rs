//! Bounded-variable primal simplex on an equality-form LP.
//!
//! Besides the `n` structural columns of the LP, the engine knows `m`
//! logical columns: column `n + i` is the unit vector `e_i` with bounds
//! `[0, 0]`. A basis is `m` indices drawn from all `n + m` columns, so a
//! complete basis always exists; a logical that stays basic at a nonzero
//! value is a primal infeasibility like any other.
//!
//! The basis matrix is factorized densely (`P B = L U`, partial pivoting)
//! and kept current between refactorizations with a product-form eta file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::kkt::{absolute_violation, Iterate};
use crate::lp::LinearProgram;
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic with `l = u`.
    Fixed,
    /// Nonbasic free column held at zero.
    Free,
}

impl std::fmt::Display for VarStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VarStatus::Basic => "basic",
            VarStatus::AtLower => "at-lower",
            VarStatus::AtUpper => "at-upper",
            VarStatus::Fixed => "fixed",
            VarStatus::Free => "free",
        })
    }
}

/// Lower bound of column `j`, counting logicals.
pub fn column_lower<T: Scalar>(lp: &LinearProgram<T>, j: usize) -> T {
    if j < lp.ncols() {
        lp.col_lower[j]
    } else {
        T::zero()
    }
}

pub fn column_upper<T: Scalar>(lp: &LinearProgram<T>, j: usize) -> T {
    if j < lp.ncols() {
        lp.col_upper[j]
    } else {
        T::zero()
    }
}

pub fn column_name<T>(lp: &LinearProgram<T>, j: usize) -> String {
    let n = lp.col_names.len();
    if j < n {
        lp.col_names[j].clone()
    } else {
        format!("logical:{}", lp.row_names[j - n])
    }
}

/// The natural nonbasic status for a column with bounds `[lo, hi]`.
pub fn default_status<T: Scalar>(lo: T, hi: T) -> VarStatus {
    if lo == hi {
        VarStatus::Fixed
    } else if lo.is_finite() {
        VarStatus::AtLower
    } else if hi.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}

/// Basic column list plus a status for every structural and logical column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// Builds a basis from its basic columns; every other column takes its
    /// default nonbasic status.
    pub fn from_basic<T: Scalar>(lp: &LinearProgram<T>, basic: Vec<usize>) -> Result<Self> {
        let total = lp.ncols() + lp.nrows();
        let mut status: Vec<VarStatus> = (0..total)
            .map(|j| default_status(column_lower(lp, j), column_upper(lp, j)))
            .collect();
        for &j in &basic {
            if j >= total {
                return Err(Error::InvalidModel(format!("basis column {j} out of range")));
            }
            status[j] = VarStatus::Basic;
        }
        let b = Self { basic, status };
        b.validate(lp)?;
        Ok(b)
    }

    /// One column per row: a zero-cost singleton column in that row when the
    /// LP has one (slack columns are), otherwise the row's logical.
    pub fn slack_basis<T: Scalar>(lp: &LinearProgram<T>) -> Self {
        let (m, n) = (lp.nrows(), lp.ncols());
        let mut basic: Vec<usize> = (0..m).map(|i| n + i).collect();
        let mut taken = vec![false; m];
        for j in (0..n).rev() {
            let mut entries = lp.matrix.col(j);
            if let (Some((i, v)), None) = (entries.next(), entries.next()) {
                if v != T::zero() && lp.objective[j] == T::zero() && !taken[i] {
                    taken[i] = true;
                    basic[i] = j;
                }
            }
        }
        Self::from_basic(lp, basic).expect("slack basis is structurally valid")
    }

    pub fn validate<T: Scalar>(&self, lp: &LinearProgram<T>) -> Result<()> {
        let (m, n) = (lp.nrows(), lp.ncols());
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.basic.len() != m {
            return bad(format!("basis has {} columns for {m} rows", self.basic.len()));
        }
        if self.status.len() != n + m {
            return bad(format!("basis has {} statuses for {} columns", self.status.len(), n + m));
        }
        let mut seen = vec![false; n + m];
        for &j in &self.basic {
            if j >= n + m {
                return bad(format!("basis column {j} out of range"));
            }
            if seen[j] {
                return bad(format!("column {} appears twice in the basis", column_name(lp, j)));
            }
            seen[j] = true;
        }
        for (j, s) in self.status.iter().enumerate() {
            let (lo, hi) = (column_lower(lp, j), column_upper(lp, j));
            let ok = match s {
                VarStatus::Basic => seen[j],
                VarStatus::AtLower => !seen[j] && lo.is_finite(),
                VarStatus::AtUpper => !seen[j] && hi.is_finite(),
                VarStatus::Fixed => !seen[j] && lo == hi,
                VarStatus::Free => !seen[j] && !lo.is_finite() && !hi.is_finite(),
            };
            if !ok {
                return bad(format!("status {s:?} is inconsistent for column {}", column_name(lp, j)));
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.basic.len()
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.status[j] == VarStatus::Basic
    }

    /// Value a nonbasic column sits at.
    pub fn nonbasic_value<T: Scalar>(&self, lp: &LinearProgram<T>, j: usize) -> T {
        match self.status[j] {
            VarStatus::AtLower | VarStatus::Fixed => column_lower(lp, j),
            VarStatus::AtUpper => column_upper(lp, j),
            VarStatus::Free | VarStatus::Basic => T::zero(),
        }
    }
}

/// Text form of a basis: one `B name` line per basic column and one
/// `U name` line per nonbasic column at its upper bound.
pub fn write_basis<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# basis {} {} {}", lp.nrows(), lp.ncols(), lp.name);
    for &j in &basis.basic {
        let _ = writeln!(out, "B {}", column_name(lp, j));
    }
    for (j, s) in basis.status.iter().enumerate() {
        if *s == VarStatus::AtUpper {
            let _ = writeln!(out, "U {}", column_name(lp, j));
        }
    }
    out
}

pub fn read_basis<T: Scalar>(lp: &LinearProgram<T>, text: &str) -> Result<Basis> {
    let (m, n) = (lp.nrows(), lp.ncols());
    let mut index: HashMap<String, usize> = HashMap::with_capacity(n + m);
    for j in 0..n + m {
        index.insert(column_name(lp, j), j);
    }
    let mut basic = Vec::with_capacity(m);
    let mut upper = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::BasisFile { line: ln + 1, message };
        let (tag, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(format!("expected `B name` or `U name`, got `{line}`")))?;
        let name = name.trim();
        let j = *index.get(name).ok_or_else(|| err(format!("unknown column `{name}`")))?;
        match tag {
            "B" => basic.push(j),
            "U" => upper.push((ln + 1, j)),
            _ => return Err(err(format!("unknown tag `{tag}`"))),
        }
    }
    let mut b = Basis::from_basic(lp, basic).map_err(|e| Error::BasisFile {
        line: 0,
        message: e.to_string(),
    })?;
    for (line, j) in upper {
        if b.status[j] == VarStatus::Basic || !column_upper(lp, j).is_finite() {
            return Err(Error::BasisFile {
                line,
                message: format!("column `{}` cannot be nonbasic at upper", column_name(lp, j)),
            });
        }
        b.status[j] = VarStatus::AtUpper;
    }
    Ok(b)
}

/// Column `j` (structural or logical) as a dense vector of length `m`.
fn scatter<T: Scalar>(lp: &LinearProgram<T>, j: usize, out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    let n = lp.ncols();
    if j < n {
        for (i, v) in lp.matrix.col(j) {
            out[i] = v;
        }
    } else {
        out[j - n] = T::one();
    }
}

fn column_dot<T: Scalar>(lp: &LinearProgram<T>, j: usize, y: &[T]) -> T {
    let n = lp.ncols();
    if j < n {
        lp.matrix.col_dot(j, y)
    } else {
        y[j - n]
    }
}

/// Greedy rank-revealing selection: walks `candidates` in order and keeps
/// each column that is linearly independent of those already kept, stopping
/// at `m` columns.
pub fn independent_columns<T: Scalar>(lp: &LinearProgram<T>, candidates: &[usize], tol: T) -> Vec<usize> {
    let m = lp.nrows();
    let mut selected = Vec::new();
    let mut row_used = vec![false; m];
    let mut pivots: Vec<(usize, Vec<(usize, T)>)> = Vec::new();
    let mut v = vec![T::zero(); m];
    for &j in candidates {
        if selected.len() == m {
            break;
        }
        scatter(lp, j, &mut v);
        let scale = v.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if scale == T::zero() {
            continue;
        }
        for (r, l) in &pivots {
            let f = v[*r];
            if f != T::zero() {
                v[*r] = T::zero();
                for &(i, li) in l {
                    v[i] -= f * li;
                }
            }
        }
        let mut p = usize::MAX;
        let mut best = T::zero();
        for i in 0..m {
            if !row_used[i] && v[i].abs() > best {
                best = v[i].abs();
                p = i;
            }
        }
        if p == usize::MAX || best <= tol * scale {
            continue;
        }
        let piv = v[p];
        let l = (0..m)
            .filter(|&i| i != p && !row_used[i] && v[i] != T::zero())
            .map(|i| (i, v[i] / piv))
            .collect();
        row_used[p] = true;
        pivots.push((p, l));
        selected.push(j);
    }
    selected
}

/// Replaces dependent basic columns with logicals so the basis factorizes.
pub fn repair_basis<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis) -> Basis {
    let (m, n) = (lp.nrows(), lp.ncols());
    let mut candidates = basis.basic.clone();
    candidates.extend(n..n + m);
    let chosen = independent_columns(lp, &candidates, T::lit(1e-9));
    let mut status = basis.status.clone();
    for (j, s) in status.iter_mut().enumerate() {
        if *s == VarStatus::Basic {
            *s = default_status(column_lower(lp, j), column_upper(lp, j));
        }
    }
    for &j in &chosen {
        status[j] = VarStatus::Basic;
    }
    Basis { basic: chosen, status }
}

#[derive(Debug, Clone)]
struct Eta<T> {
    row: usize,
    pivot: T,
    entries: Vec<(usize, T)>,
}

/// `P B = L U` of the basis matrix plus the eta file of later column
/// replacements.
#[derive(Debug, Clone)]
pub struct FactorizedBasis<T> {
    m: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    etas: Vec<Eta<T>>,
    condition: T,
}

pub fn factorize<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis) -> Result<FactorizedBasis<T>> {
    let m = lp.nrows();
    check_len("basis columns", m, basis.basic.len())?;
    let mut lu = vec![T::zero(); m * m];
    let mut col = vec![T::zero(); m];
    let mut col_scale = vec![T::zero(); m];
    for (k, &j) in basis.basic.iter().enumerate() {
        scatter(lp, j, &mut col);
        for i in 0..m {
            lu[i * m + k] = col[i];
            col_scale[k] = col_scale[k].max(col[i].abs());
        }
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let tol = T::lit(1e-11);
    for k in 0..m {
        let mut p = k;
        let mut best = lu[k * m + k].abs();
        for i in k + 1..m {
            let v = lu[i * m + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol * col_scale[k].max(T::one()) {
            let chosen = independent_columns(lp, &basis.basic, T::lit(1e-9));
            let dependent: Vec<usize> = basis.basic.iter().filter(|j| !chosen.contains(j)).copied().collect();
            return Err(Error::SingularBasis { dependent });
        }
        if p != k {
            for c in 0..m {
                lu.swap(k * m + c, p * m + c);
            }
            perm.swap(k, p);
        }
        let piv = lu[k * m + k];
        for i in k + 1..m {
            let f = lu[i * m + k];
            if f == T::zero() {
                continue;
            }
            let f = f / piv;
            lu[i * m + k] = f;
            for c in k + 1..m {
                let u = lu[k * m + c];
                if u != T::zero() {
                    lu[i * m + c] -= f * u;
                }
            }
        }
    }
    let (mut dmax, mut dmin) = (T::zero(), T::infinity());
    for k in 0..m {
        let d = lu[k * m + k].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    let condition = if m == 0 { T::one() } else { dmax / dmin };
    Ok(FactorizedBasis {
        m,
        lu,
        perm,
        etas: Vec::new(),
        condition,
    })
}

impl<T: Scalar> FactorizedBasis<T> {
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Column updates applied since the last factorization.
    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    /// Ratio of the largest to the smallest pivot of `U`.
    pub fn condition_estimate(&self) -> T {
        self.condition
    }

    /// `B^-1 v`.
    pub fn ftran(&self, v: &[T]) -> Result<Vec<T>> {
        check_len("ftran", self.m, v.len())?;
        let m = self.m;
        let mut w: Vec<T> = self.perm.iter().map(|&p| v[p]).collect();
        for i in 0..m {
            let mut s = w[i];
            for k in 0..i {
                let l = self.lu[i * m + k];
                if l != T::zero() {
                    s -= l * w[k];
                }
            }
            w[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = w[i];
            for k in i + 1..m {
                let u = self.lu[i * m + k];
                if u != T::zero() {
                    s -= u * w[k];
                }
            }
            w[i] = s / self.lu[i * m + i];
        }
        for eta in &self.etas {
            let wr = w[eta.row] / eta.pivot;
            w[eta.row] = wr;
            if wr != T::zero() {
                for &(i, d) in &eta.entries {
                    w[i] -= d * wr;
                }
            }
        }
        Ok(w)
    }

    /// `B^-T v`.
    pub fn btran(&self, v: &[T]) -> Result<Vec<T>> {
        check_len("btran", self.m, v.len())?;
        let m = self.m;
        let mut w = v.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = w[eta.row];
            for &(i, d) in &eta.entries {
                s -= d * w[i];
            }
            w[eta.row] = s / eta.pivot;
        }
        // U^T t = w
        for i in 0..m {
            let mut s = w[i];
            for k in 0..i {
                let u = self.lu[k * m + i];
                if u != T::zero() {
                    s -= u * w[k];
                }
            }
            w[i] = s / self.lu[i * m + i];
        }
        // L^T t = w
        for i in (0..m).rev() {
            let mut s = w[i];
            for k in i + 1..m {
                let l = self.lu[k * m + i];
                if l != T::zero() {
                    s -= l * w[k];
                }
            }
            w[i] = s;
        }
        let mut out = vec![T::zero(); m];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = w[k];
        }
        Ok(out)
    }

    /// Records that basis position `row` now holds a column whose `ftran`
    /// is `d`.
    pub fn update(&mut self, row: usize, d: &[T]) -> Result<()> {
        check_len("eta column", self.m, d.len())?;
        let pivot = d[row];
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::Numerical {
                iteration: self.etas.len(),
                message: "zero pivot in basis update".into(),
            });
        }
        let entries = d
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != row && v != T::zero())
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta { row, pivot, entries });
        Ok(())
    }
}

/// Result of a bounded ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioOutcome<T> {
    /// Nothing limits the step.
    Unbounded,
    /// The entering column reaches its own opposite bound first.
    BoundFlip { step: T },
    /// Basis position `position` hits the bound value `target`.
    Leave { position: usize, step: T, target: T },
}

/// Two-pass (Harris) ratio test. Basic value `k` moves at rate
/// `-dir * alpha[k]` per unit step of the entering column; `lower`/`upper`
/// are the bounds each basic value must respect along the step and
/// `entering_range` is the distance the entering column may travel.
///
/// Pass one finds the largest step allowed with every bound relaxed by
/// `tol`; pass two picks, among the positions whose exact ratio fits within
/// that step, the one with the largest `|alpha|`. With `tie_order` set, the
/// exact minimum ratio is used and ties go to the smallest entry of
/// `tie_order` (Bland).
#[allow(clippy::too_many_arguments)]
pub fn ratio_test<T: Scalar>(
    x: &[T],
    lower: &[T],
    upper: &[T],
    alpha: &[T],
    dir: T,
    entering_range: T,
    tol: T,
    pivot_tol: T,
    tie_order: Option<&[usize]>,
) -> RatioOutcome<T> {
    let tol = if tie_order.is_some() { T::zero() } else { tol };
    let mut bound = T::infinity();
    for k in 0..x.len() {
        if alpha[k].abs() <= pivot_tol {
            continue;
        }
        let rate = -dir * alpha[k];
        let r = if rate < T::zero() && lower[k].is_finite() {
            (x[k] - lower[k] + tol) / -rate
        } else if rate > T::zero() && upper[k].is_finite() {
            (upper[k] + tol - x[k]) / rate
        } else {
            continue;
        };
        bound = bound.min(r);
    }
    if entering_range <= bound {
        if entering_range.is_finite() {
            return RatioOutcome::BoundFlip { step: entering_range };
        }
        return RatioOutcome::Unbounded;
    }
    let mut pick: Option<(usize, T, T)> = None;
    let mut best_alpha = T::zero();
    for k in 0..x.len() {
        if alpha[k].abs() <= pivot_tol {
            continue;
        }
        let rate = -dir * alpha[k];
        let (ratio, target) = if rate < T::zero() && lower[k].is_finite() {
            ((x[k] - lower[k]) / -rate, lower[k])
        } else if rate > T::zero() && upper[k].is_finite() {
            ((upper[k] - x[k]) / rate, upper[k])
        } else {
            continue;
        };
        if ratio > bound {
            continue;
        }
        let better = match (tie_order, pick) {
            (_, None) => true,
            (Some(order), Some((p, _, _))) => order[k] < order[p],
            (None, Some(_)) => alpha[k].abs() > best_alpha,
        };
        if better {
            best_alpha = alpha[k].abs();
            pick = Some((k, ratio.max(T::zero()), target));
        }
    }
    match pick {
        Some((position, step, target)) => RatioOutcome::Leave { position, step, target },
        None => RatioOutcome::Unbounded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    /// Final acceptance tolerance on the absolute KKT violation.
    pub eps_abs: f64,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// `None` allows `50 (n + m) + 1000` pivots.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 64,
            bland_after: 50,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimplexStatus {
    Optimal,
    IterationLimit,
    Cancelled,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplexStats {
    pub pivots: usize,
    pub bound_flips: usize,
    pub degenerate_pivots: usize,
    pub phase1_pivots: usize,
    pub refactorizations: usize,
    /// Times a numerically singular basis had columns swapped for logicals.
    pub repairs: usize,
    /// Largest gap between updated and recomputed basic values seen at a
    /// refactorization.
    pub max_drift: f64,
}

#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    pub basis: Basis,
    /// Basic solution of the final basis (structural columns only).
    pub iterate: Iterate<T>,
    pub status: SimplexStatus,
    pub objective: T,
    pub stats: SimplexStats,
}

/// Primal values of all columns (structural and logical) for a factorized
/// basis: nonbasics at their bounds, `x_B = B^-1 (b - N x_N)`.
fn basic_values<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis, f: &FactorizedBasis<T>) -> Result<Vec<T>> {
    let (m, n) = (lp.nrows(), lp.ncols());
    let mut x = vec![T::zero(); n + m];
    let mut rhs = lp.rhs.clone();
    for j in 0..n + m {
        if basis.status[j] == VarStatus::Basic {
            continue;
        }
        let v = basis.nonbasic_value(lp, j);
        x[j] = v;
        if v != T::zero() {
            if j < n {
                for (i, a) in lp.matrix.col(j) {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - n] -= v;
            }
        }
    }
    let xb = f.ftran(&rhs)?;
    for (k, &j) in basis.basic.iter().enumerate() {
        x[j] = xb[k];
    }
    Ok(x)
}

/// Full basic solution of `basis`: `x`, `y = B^-T c_B`, `z = c - A^T y`.
/// Returns the iterate (structural columns) and the logical values.
pub fn basic_solution<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis) -> Result<(Iterate<T>, Vec<T>)> {
    basis.validate(lp)?;
    let f = factorize(lp, basis)?;
    let n = lp.ncols();
    let x = basic_values(lp, basis, &f)?;
    let c_b: Vec<T> = basis
        .basic
        .iter()
        .map(|&j| if j < n { lp.objective[j] } else { T::zero() })
        .collect();
    let y = f.btran(&c_b)?;
    let aty = lp.matrix.matvec_transpose(&y)?;
    let z = lp.objective.iter().zip(&aty).map(|(&c, &a)| c - a).collect();
    let logicals = x[n..].to_vec();
    Ok((
        Iterate {
            x: x[..n].to_vec(),
            y,
            z,
            k: 0,
        },
        logicals,
    ))
}

/// Optimality check of `basis` from the LP data alone: recomputes the basic
/// solution and requires every logical within `eps_abs` of zero and an
/// absolute KKT violation of at most `eps_abs`.
pub fn verify_basis<T: Scalar>(lp: &LinearProgram<T>, basis: &Basis, eps_abs: T) -> Result<(bool, Iterate<T>, T)> {
    let (it, logicals) = basic_solution(lp, basis)?;
    let logical_err = logicals.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let viol = absolute_violation(lp, &it)?.max(logical_err);
    Ok((viol <= eps_abs, it, viol))
}

struct Engine<'a, T> {
    lp: &'a LinearProgram<T>,
    n: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    basis: Basis,
    x: Vec<T>,
    factor: FactorizedBasis<T>,
    stats: SimplexStats,
    ftol: T,
    otol: T,
    ptol: T,
    refactor_every: usize,
}

impl<T: Scalar> Engine<'_, T> {
    fn refactor(&mut self) -> Result<()> {
        let old: Vec<(usize, T)> = self.basis.basic.iter().map(|&j| (j, self.x[j])).collect();
        self.factor = match factorize(self.lp, &self.basis) {
            Ok(f) => f,
            Err(Error::SingularBasis { .. }) => {
                self.basis = repair_basis(self.lp, &self.basis);
                self.stats.repairs += 1;
                factorize(self.lp, &self.basis).map_err(|e| Error::Numerical {
                    iteration: self.stats.pivots,
                    message: format!("refactorization failed after repair: {e}"),
                })?
            }
            Err(e) => return Err(e),
        };
        self.x = basic_values(self.lp, &self.basis, &self.factor)?;
        let drift = old
            .iter()
            .filter(|&&(j, _)| self.basis.status[j] == VarStatus::Basic)
            .fold(T::zero(), |a, &(j, v)| a.max((self.x[j] - v).abs()));
        self.stats.max_drift = self.stats.max_drift.max(drift.as_f64());
        self.stats.refactorizations += 1;
        Ok(())
    }

    fn infeasibility(&self) -> T {
        self.basis.basic.iter().fold(T::zero(), |a, &j| {
            let v = self.x[j];
            a + (self.lower[j] - v).max(T::zero()) + (v - self.upper[j]).max(T::zero())
        })
    }

    fn status_at(&self, j: usize, value: T) -> VarStatus {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if lo == hi {
            VarStatus::Fixed
        } else if value == lo {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        }
    }
}

/// Runs the bounded primal simplex from `start`. A singular start basis is
/// repaired with logicals first. Unboundedness, infeasibility and
/// breakdowns are errors; cancellation and the pivot limit are statuses.
pub fn primal_simplex<T: Scalar>(
    lp: &LinearProgram<T>,
    start: &Basis,
    options: &SimplexOptions,
    cancel: &AtomicBool,
) -> Result<SimplexResult<T>> {
    if !lp.is_standard_form() {
        return Err(Error::InvalidModel("simplex expects an equality-form minimization LP".into()));
    }
    start.validate(lp)?;
    let (m, n) = (lp.nrows(), lp.ncols());
    let mut basis = start.clone();
    let factor = match factorize(lp, &basis) {
        Ok(f) => f,
        Err(Error::SingularBasis { .. }) => {
            basis = repair_basis(lp, &basis);
            factorize(lp, &basis)?
        }
        Err(e) => return Err(e),
    };
    let mut lower = lp.col_lower.clone();
    let mut upper = lp.col_upper.clone();
    lower.resize(n + m, T::zero());
    upper.resize(n + m, T::zero());
    let mut cost = lp.objective.clone();
    cost.resize(n + m, T::zero());
    let x = basic_values(lp, &basis, &factor)?;
    let eps = T::epsilon() * T::lit(100.0);
    let mut e = Engine {
        lp,
        n,
        lower,
        upper,
        cost,
        basis,
        x,
        factor,
        stats: SimplexStats::default(),
        ftol: T::lit(options.feasibility_tol).max(eps),
        otol: T::lit(options.optimality_tol).max(eps),
        ptol: T::lit(options.pivot_tol).max(eps),
        refactor_every: options.refactor_every.max(1),
    };
    let max_iter = options.max_iterations.unwrap_or(50 * (n + m) + 1000);
    let mut degenerate_run = 0usize;
    let mut col = vec![T::zero(); m];

    let status = loop {
        if cancel.load(Ordering::Acquire) {
            break SimplexStatus::Cancelled;
        }
        if e.stats.pivots >= max_iter {
            break SimplexStatus::IterationLimit;
        }
        if e.factor.updates() >= e.refactor_every {
            e.refactor()?;
        }

        let mut c_b = vec![T::zero(); m];
        let mut phase1 = false;
        for (k, &j) in e.basis.basic.iter().enumerate() {
            if e.x[j] < e.lower[j] - e.ftol {
                c_b[k] = -T::one();
                phase1 = true;
            } else if e.x[j] > e.upper[j] + e.ftol {
                c_b[k] = T::one();
                phase1 = true;
            }
        }
        if !phase1 {
            for (k, &j) in e.basis.basic.iter().enumerate() {
                c_b[k] = e.cost[j];
            }
        }
        let y = e.factor.btran(&c_b)?;

        let bland = degenerate_run >= options.bland_after;
        let mut entering: Option<(usize, T, T)> = None;
        for j in 0..n + m {
            let st = e.basis.status[j];
            if matches!(st, VarStatus::Basic | VarStatus::Fixed) {
                continue;
            }
            let cj = if phase1 { T::zero() } else { e.cost[j] };
            let d = cj - column_dot(lp, j, &y);
            let dir = match st {
                VarStatus::AtLower if d < -e.otol => T::one(),
                VarStatus::AtUpper if d > e.otol => -T::one(),
                VarStatus::Free if d.abs() > e.otol => -d.signum(),
                _ => continue,
            };
            if bland {
                entering = Some((j, d, dir));
                break;
            }
            if entering.is_none_or(|(_, best, _)| d.abs() > best.abs()) {
                entering = Some((j, d, dir));
            }
        }

        let Some((q, _, dir)) = entering else {
            if e.factor.updates() > 0 {
                // confirm on fresh factors before claiming anything
                e.refactor()?;
                continue;
            }
            if phase1 {
                return Err(Error::Infeasible {
                    infeasibility: e.infeasibility().as_f64(),
                });
            }
            break SimplexStatus::Optimal;
        };

        scatter(lp, q, &mut col);
        let alpha = e.factor.ftran(&col)?;
        let mut xb = Vec::with_capacity(m);
        let mut lo_b = Vec::with_capacity(m);
        let mut hi_b = Vec::with_capacity(m);
        for &j in &e.basis.basic {
            let v = e.x[j];
            xb.push(v);
            if v < e.lower[j] - e.ftol {
                lo_b.push(T::neg_infinity());
                hi_b.push(e.lower[j]);
            } else if v > e.upper[j] + e.ftol {
                lo_b.push(e.upper[j]);
                hi_b.push(T::infinity());
            } else {
                lo_b.push(e.lower[j]);
                hi_b.push(e.upper[j]);
            }
        }
        let range = e.upper[q] - e.lower[q];
        let order = bland.then_some(e.basis.basic.as_slice());
        let outcome = ratio_test(&xb, &lo_b, &hi_b, &alpha, dir, range, e.ftol, e.ptol, order);

        let step = match outcome {
            RatioOutcome::Unbounded => {
                if phase1 {
                    return Err(Error::Numerical {
                        iteration: e.stats.pivots,
                        message: "unbounded ray while minimizing infeasibility".into(),
                    });
                }
                return Err(Error::Unbounded { column: q });
            }
            RatioOutcome::BoundFlip { step } => {
                e.x[q] = if dir > T::zero() { e.upper[q] } else { e.lower[q] };
                e.basis.status[q] = if dir > T::zero() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                for (k, &j) in e.basis.basic.iter().enumerate() {
                    e.x[j] -= step * dir * alpha[k];
                }
                e.stats.bound_flips += 1;
                step
            }
            RatioOutcome::Leave { position, step, target } => {
                e.x[q] += dir * step;
                for (k, &j) in e.basis.basic.iter().enumerate() {
                    e.x[j] -= step * dir * alpha[k];
                }
                let out = e.basis.basic[position];
                e.x[out] = target;
                e.basis.status[out] = e.status_at(out, target);
                e.basis.status[q] = VarStatus::Basic;
                e.basis.basic[position] = q;
                if let Err(err) = e.factor.update(position, &alpha) {
                    e.refactor().map_err(|_| err)?;
                }
                step
            }
        };
        e.stats.pivots += 1;
        if phase1 {
            e.stats.phase1_pivots += 1;
        }
        if step <= e.ftol {
            e.stats.degenerate_pivots += 1;
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        if e.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                iteration: e.stats.pivots,
                message: "non-finite basic value".into(),
            });
        }
    };

    let c_b: Vec<T> = e.basis.basic.iter().map(|&j| e.cost[j]).collect();
    let y = e.factor.btran(&c_b)?;
    let aty = lp.matrix.matvec_transpose(&y)?;
    let z: Vec<T> = lp.objective.iter().zip(&aty).map(|(&c, &a)| c - a).collect();
    let x: Vec<T> = e.x[..e.n].to_vec();
    let objective = dot(&lp.objective, &x);
    let pivots = e.stats.pivots;
    Ok(SimplexResult {
        basis: e.basis,
        iterate: Iterate { x, y, z, k: pivots },
        status,
        objective,
        stats: e.stats,
    })
}
