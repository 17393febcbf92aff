//! Residuals, objective gap and every termination test used by the solvers.
//!
//! All functions accept a general-form [`LinearProgram`]. For an equality row
//! the primal residual is `b - A x`; for a row with activity interval
//! `[lo, hi]` it is the signed distance of `(A x)_i` to that interval. The
//! dual residual is `A^T y + z - c`. Sign requirements on `y` and `z` follow
//! from which bounds are finite: with `s = +1` for minimization and `-1` for
//! maximization, `s * z_j > 0` must be backed by a finite lower bound and
//! `s * z_j < 0` by a finite upper bound (rows likewise with `y_i`). Parts of
//! `y`, `z` with an unbacked sign are reported as dual sign violations.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::lp::LinearProgram;
use crate::scalar::{dot, norm2, norm_inf, Scalar};

/// Primal/dual/reduced-cost triple with the iteration it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub k: usize,
}

impl<T: Scalar> Iterate<T> {
    pub fn zeros(lp: &LinearProgram<T>) -> Self {
        Self {
            x: vec![T::zero(); lp.ncols()],
            y: vec![T::zero(); lp.nrows()],
            z: vec![T::zero(); lp.ncols()],
            k: 0,
        }
    }

    pub fn check_dims(&self, lp: &LinearProgram<T>) -> Result<()> {
        check_len("iterate x", lp.ncols(), self.x.len())?;
        check_len("iterate y", lp.nrows(), self.y.len())?;
        check_len("iterate z", lp.ncols(), self.z.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    #[serde(rename = "rP_norm2")]
    pub rp_norm2: T,
    #[serde(rename = "rD_norm2")]
    pub rd_norm2: T,
    #[serde(rename = "rP_inf")]
    pub rp_inf: T,
    #[serde(rename = "rD_inf")]
    pub rd_inf: T,
    pub primal_objective: T,
    pub dual_objective: T,
    pub gap_abs: T,
    pub rel_primal: T,
    pub rel_dual: T,
    pub rel_gap: T,
    pub maxresid_rel: T,
    pub complementarity: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    pub eps_rel: T,
    pub eps_abs: T,
    pub eps_cross: T,
    pub decrement: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            eps_rel: T::lit(1e-6),
            eps_abs: T::lit(1e-6),
            eps_cross: T::lit(1e-2),
            decrement: T::lit(0.1),
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidConfig(m.to_string()));
        if !(self.decrement > T::zero() && self.decrement < T::one()) {
            return bad("decrement must lie in (0, 1)");
        }
        if !(self.eps_rel > T::zero()) {
            return bad("eps_rel must be positive");
        }
        if !(self.eps_rel <= self.eps_cross) {
            return bad("eps_rel must not exceed eps_cross");
        }
        if !(self.eps_abs > T::zero()) {
            return bad("eps_abs must be positive");
        }
        Ok(())
    }
}

/// Signed distance of `v` outside `[lo, hi]`: positive below, negative above.
#[inline]
fn interval_residual<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo - v
    } else if v > hi {
        hi - v
    } else {
        T::zero()
    }
}

/// Contribution of a multiplier `w` on the interval `[lo, hi]` to the dual
/// objective, plus the part of `w` whose sign has no finite bound behind it.
#[inline]
fn bound_term<T: Scalar>(w: T, lo: T, hi: T, sign: T) -> (T, T) {
    let s = sign * w;
    if s > T::zero() {
        if lo.is_finite() {
            (w * lo, T::zero())
        } else {
            (T::zero(), w)
        }
    } else if s < T::zero() {
        if hi.is_finite() {
            (w * hi, T::zero())
        } else {
            (T::zero(), w)
        }
    } else {
        (T::zero(), T::zero())
    }
}

/// Distance of `v` to the nearest finite end of `[lo, hi]`, or zero when
/// neither end is finite.
#[inline]
fn bound_distance<T: Scalar>(v: T, lo: T, hi: T) -> T {
    let dl = if lo.is_finite() { (v - lo).abs() } else { T::infinity() };
    let du = if hi.is_finite() { (v - hi).abs() } else { T::infinity() };
    let d = dl.min(du);
    if d.is_finite() {
        d
    } else {
        T::zero()
    }
}

pub fn primal_residual<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<Vec<T>> {
    it.check_dims(lp)?;
    let ax = lp.matrix.matvec(&it.x)?;
    Ok(primal_residual_from(lp, &ax))
}

fn primal_residual_from<T: Scalar>(lp: &LinearProgram<T>, ax: &[T]) -> Vec<T> {
    (0..lp.nrows())
        .map(|i| {
            let (lo, hi) = lp.row_bounds(i);
            interval_residual(ax[i], lo, hi)
        })
        .collect()
}

/// Per-column violation of `l <= x <= u`, as a signed distance.
pub fn bound_violation<T: Scalar>(lp: &LinearProgram<T>, x: &[T]) -> Result<Vec<T>> {
    check_len("bound_violation x", lp.ncols(), x.len())?;
    Ok(x.iter()
        .enumerate()
        .map(|(j, &v)| interval_residual(v, lp.col_lower[j], lp.col_upper[j]))
        .collect())
}

pub fn dual_residual<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<Vec<T>> {
    it.check_dims(lp)?;
    let aty = lp.matrix.matvec_transpose(&it.y)?;
    Ok(dual_residual_from(lp, it, &aty))
}

fn dual_residual_from<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>, aty: &[T]) -> Vec<T> {
    (0..lp.ncols()).map(|j| aty[j] + it.z[j] - lp.objective[j]).collect()
}

/// Parts of `y` and `z` whose sign is not backed by a finite bound, rows first.
pub fn dual_sign_violation<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<Vec<T>> {
    it.check_dims(lp)?;
    let sign = lp.sense.sign::<T>();
    let mut out = Vec::with_capacity(lp.nrows() + lp.ncols());
    for i in 0..lp.nrows() {
        let (lo, hi) = lp.row_bounds(i);
        out.push(bound_term(it.y[i], lo, hi, sign).1);
    }
    for j in 0..lp.ncols() {
        out.push(bound_term(it.z[j], lp.col_lower[j], lp.col_upper[j], sign).1);
    }
    Ok(out)
}

/// `(c^T x, dual objective)`. The dual objective is `b^T y` for the
/// `A x = b, x >= 0` form and picks up `l_j z_j` / `u_j z_j` (and the row
/// analogue) terms for general bounds. The objective offset is excluded.
pub fn objective_gap<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<(T, T)> {
    it.check_dims(lp)?;
    Ok(objectives(lp, it))
}

fn objectives<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> (T, T) {
    let sign = lp.sense.sign::<T>();
    let primal = dot(&lp.objective, &it.x);
    let mut dual = T::zero();
    for i in 0..lp.nrows() {
        let (lo, hi) = lp.row_bounds(i);
        dual += bound_term(it.y[i], lo, hi, sign).0;
    }
    for j in 0..lp.ncols() {
        dual += bound_term(it.z[j], lp.col_lower[j], lp.col_upper[j], sign).0;
    }
    (primal, dual)
}

fn complementarity_terms<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>, ax: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(lp.nrows() + lp.ncols());
    for i in 0..lp.nrows() {
        let (lo, hi) = lp.row_bounds(i);
        out.push(bound_distance(ax[i], lo, hi) * it.y[i].abs());
    }
    for j in 0..lp.ncols() {
        out.push(bound_distance(it.x[j], lp.col_lower[j], lp.col_upper[j]) * it.z[j].abs());
    }
    out
}

pub fn relative_report<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<ResidualReport<T>> {
    it.check_dims(lp)?;
    let ax = lp.matrix.matvec(&it.x)?;
    let aty = lp.matrix.matvec_transpose(&it.y)?;
    Ok(relative_report_with_products(lp, it, &ax, &aty))
}

/// [`relative_report`] with `A x` and `A^T y` already available.
pub fn relative_report_with_products<T: Scalar>(
    lp: &LinearProgram<T>,
    it: &Iterate<T>,
    ax: &[T],
    aty: &[T],
) -> ResidualReport<T> {
    let rp = primal_residual_from(lp, ax);
    let rd = dual_residual_from(lp, it, aty);
    let (pobj, dobj) = objectives(lp, it);
    let gap_abs = (pobj - dobj).abs();
    let rp_norm2 = norm2(&rp);
    let rd_norm2 = norm2(&rd);
    let b_norm = norm2(&lp.rhs);
    let c_norm = norm2(&lp.objective);
    let rel_primal = rp_norm2 / (T::one() + b_norm);
    let rel_dual = rd_norm2 / (T::one() + c_norm);
    let rel_gap = gap_abs / (T::one() + pobj.abs() + dobj.abs());
    let maxresid_rel = rel_primal.max(rel_dual).max(rel_gap);
    let complementarity = complementarity_terms(lp, it, ax).into_iter().sum();
    ResidualReport {
        rp_norm2,
        rd_norm2,
        rp_inf: norm_inf(&rp).max(norm_inf(&bound_violation(lp, &it.x).unwrap_or_default())),
        rd_inf: norm_inf(&rd),
        primal_objective: pobj,
        dual_objective: dobj,
        gap_abs,
        rel_primal,
        rel_dual,
        rel_gap,
        maxresid_rel,
        complementarity,
    }
}

/// `maxresid_rel <= eps_rel`.
pub fn converged_relative<T: Scalar>(report: &ResidualReport<T>, eps_rel: T) -> bool {
    report.maxresid_rel <= eps_rel
}

/// Largest absolute violation of any optimality condition: row
/// infeasibility, bound violation, dual residual, dual sign violation and
/// per-entry complementarity.
pub fn absolute_violation<T: Scalar>(lp: &LinearProgram<T>, it: &Iterate<T>) -> Result<T> {
    it.check_dims(lp)?;
    let ax = lp.matrix.matvec(&it.x)?;
    let aty = lp.matrix.matvec_transpose(&it.y)?;
    let parts = [
        norm_inf(&primal_residual_from(lp, &ax)),
        norm_inf(&bound_violation(lp, &it.x)?),
        norm_inf(&dual_residual_from(lp, it, &aty)),
        norm_inf(&dual_sign_violation(lp, it)?),
        norm_inf(&complementarity_terms(lp, it, &ax)),
    ];
    Ok(parts.into_iter().fold(T::zero(), T::max))
}
