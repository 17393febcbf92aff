#![allow(dead_code)]

use std::path::PathBuf;

use ccpdhg::mps::read_mps_file;
use ccpdhg::{Lp, ObjSense, RowSense, SparseMatrix};
use nalgebra::{DMatrix, DVector};

/// Model name and known optimal objective.
pub const FIXTURES: &[(&str, f64)] = &[
    ("afiro", -464.75314285714285),
    ("adlittle", 225494.9631623803),
    ("avgas", -7.75),
    ("blending", -3200.0),
    ("chip", -900.0),
    ("dD2e", -3000.0),
    ("etamacro", -755.7152333005275),
    ("israel", -896644.8218630459),
    ("qap04", 32.0),
    ("scrs8", 904.296953800792),
    ("sctest", 5.75),
    ("silly-names", -1.0),
    ("smalllp", 54.0),
    ("stair", -251.26695119296335),
    ("standata", 1257.6995),
    ("test", -4.75),
];

/// Models PDHG handles within a few seconds in both modes.
pub const QUICK: &[&str] = &[
    "afiro", "adlittle", "avgas", "blending", "chip", "dD2e", "israel", "qap04", "sctest", "silly-names",
    "smalllp", "standata", "test",
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/lp")
}

pub fn load(name: &str) -> Lp {
    read_mps_file::<f64>(data_dir().join(format!("{name}.mps"))).unwrap()
}

pub fn optimum(name: &str) -> f64 {
    FIXTURES.iter().find(|f| f.0 == name).unwrap().1
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Best objective over all vertices of `{lo <= A x <= hi, l <= x <= u}`,
/// found by solving every `n x n` system of active constraints. `None` when
/// no vertex is feasible. Only meaningful for LPs whose optimum is attained
/// at a vertex, e.g. with finite column bounds.
pub fn vertex_optimum(lp: &Lp) -> Option<f64> {
    let (m, n) = (lp.nrows(), lp.ncols());
    let dense = lp.matrix.to_dense();
    // each candidate constraint: (coefficients, value)
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        let (lo, hi) = lp.row_bounds(i);
        for v in [lo, hi] {
            if v.is_finite() && !cons.iter().any(|c| c.0 == dense[i] && c.1 == v) {
                cons.push((dense[i].clone(), v));
            }
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for v in [lp.col_lower[j], lp.col_upper[j]] {
            if v.is_finite() && !cons.iter().any(|c| c.0 == e && c.1 == v) {
                cons.push((e.clone(), v));
            }
        }
    }
    let sign = if lp.sense == ObjSense::Max { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(cons.len(), n, 0, &mut pick, &mut |idx| {
        let a = DMatrix::from_fn(n, n, |r, c| cons[idx[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| cons[idx[r]].1);
        let Some(x) = a.clone().lu().solve(&b) else { return };
        if (&a * &x - &b).amax() > 1e-9 * (1.0 + b.amax()) {
            return;
        }
        let x: Vec<f64> = x.iter().copied().collect();
        if !feasible(lp, &dense, &x, 1e-9) {
            return;
        }
        let obj = sign * lp.objective_value(&x);
        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
    });
    best.map(|b| sign * b)
}

fn choose(total: usize, k: usize, from: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in from..total {
        if total - i < k - pick.len() {
            break;
        }
        pick.push(i);
        choose(total, k, i + 1, pick, f);
        pick.pop();
    }
}

pub fn feasible(lp: &Lp, dense: &[Vec<f64>], x: &[f64], tol: f64) -> bool {
    for (j, &v) in x.iter().enumerate() {
        if v < lp.col_lower[j] - tol * (1.0 + v.abs()) || v > lp.col_upper[j] + tol * (1.0 + v.abs()) {
            return false;
        }
    }
    for (i, row) in dense.iter().enumerate() {
        let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        let (lo, hi) = lp.row_bounds(i);
        let t = tol * (1.0 + ax.abs());
        if ax < lo - t || ax > hi + t {
            return false;
        }
    }
    true
}

/// Small dense LP in general form with integer data and boxed columns.
pub fn boxed_lp(sense: ObjSense, c: Vec<f64>, a: Vec<Vec<f64>>, senses: Vec<RowSense>, b: Vec<f64>, upper: Vec<f64>) -> Lp {
    let n = c.len();
    let lp = Lp::new(sense, c, SparseMatrix::from_dense(&a), senses, b).unwrap();
    lp.with_bounds(vec![0.0; n], upper).unwrap()
}

pub mod strategies {
    use ccpdhg::{Lp, ObjSense, RowSense};
    use proptest::prelude::*;

    /// Dense matrix with roughly 40% nonzeros in `[-10, 10]`.
    pub fn sparse_dense(max_m: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
            prop::collection::vec(
                prop::collection::vec(prop_oneof![3 => Just(0.0), 2 => -10.0..10.0f64], n),
                m,
            )
        })
    }

    fn sense() -> impl Strategy<Value = RowSense> {
        prop_oneof![Just(RowSense::Le), Just(RowSense::Ge), Just(RowSense::Eq)]
    }

    /// General-form LP with integer data, `m <= 3`, `n <= 5` and every
    /// column boxed in `[0, u]`, so an optimum exists whenever the LP is
    /// feasible.
    pub fn boxed_lp() -> impl Strategy<Value = Lp> {
        (1..=3usize, 1..=5usize)
            .prop_flat_map(|(m, n)| {
                (
                    prop::bool::ANY,
                    prop::collection::vec(-5i32..=5, n),
                    prop::collection::vec(prop::collection::vec(prop_oneof![2 => Just(0i32), 3 => -3i32..=3], n), m),
                    prop::collection::vec(sense(), m),
                    prop::collection::vec(-4i32..=10, m),
                    prop::collection::vec(1i32..=6, n),
                )
            })
            .prop_map(|(max, c, a, senses, b, u)| {
                let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
                super::boxed_lp(
                    if max { ObjSense::Max } else { ObjSense::Min },
                    f(c),
                    a.into_iter().map(f).collect(),
                    senses,
                    f(b),
                    f(u),
                )
            })
    }

    /// Like [`boxed_lp`] but feasible by construction: the rhs is derived
    /// from an integer point inside the box.
    pub fn feasible_lp() -> impl Strategy<Value = (Lp, Vec<f64>)> {
        (boxed_lp(), prop::collection::vec(0.0..1.0f64, 5), prop::collection::vec(0i32..=3, 3)).prop_map(
            |(mut lp, frac, slack)| {
                let x0: Vec<f64> = (0..lp.ncols()).map(|j| (frac[j] * lp.col_upper[j]).round()).collect();
                let ax = lp.matrix.matvec(&x0).unwrap();
                for i in 0..lp.nrows() {
                    lp.rhs[i] = match lp.row_senses[i] {
                        RowSense::Le => ax[i] + f64::from(slack[i]),
                        RowSense::Ge => ax[i] - f64::from(slack[i]),
                        RowSense::Eq => ax[i],
                    };
                }
                (lp, x0)
            },
        )
    }
}

/// Equality-form LP `min c x, A x = b, 0 <= x <= u` with a planted optimal
/// vertex: `m` basic columns strictly inside their box, the rest at a bound
/// with reduced costs of the right sign. Returns the LP and its optimum.
pub fn planted_lp(m: usize, n: usize, seed: u64) -> (Lp, f64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    assert!(n >= m);
    let mut a = vec![vec![0.0; n]; m];
    for (i, row) in a.iter_mut().enumerate() {
        // a dense diagonal keeps the planted basis nonsingular
        row[i] = rng.random_range(2.0..4.0);
        for v in row.iter_mut() {
            if *v == 0.0 && rng.random_bool(0.15) {
                *v = rng.random_range(-3.0..3.0f64).round();
            }
        }
    }
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..10.0f64).round()).collect();
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    for j in 0..n {
        if j < m {
            x[j] = rng.random_range(0.2..0.8) * upper[j];
        } else if rng.random_bool(0.3) {
            x[j] = upper[j];
            z[j] = -rng.random_range(0.1..2.0);
        } else {
            z[j] = rng.random_range(0.1..2.0);
        }
    }
    let y: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let c: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a[i][j] * y[i]).sum::<f64>() + z[j]).collect();
    let b: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i][j] * x[j]).sum()).collect();
    let opt: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
    let lp = Lp::new(ObjSense::Min, c, SparseMatrix::from_dense(&a), vec![RowSense::Eq; m], b)
        .unwrap()
        .with_bounds(vec![0.0; n], upper)
        .unwrap();
    (lp, opt)
}

/// Equality-form LP `min c x, A x = b, 0 <= x <= u` with random costs and a
/// right-hand side from a random interior point. The optimum is unknown and
/// typically degenerate enough that loose snapshots need real cleanup.
pub fn random_box_lp(m: usize, n: usize, seed: u64) -> Lp {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![vec![0.0; n]; m];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = rng.random_range(1.0..3.0);
        for v in row.iter_mut() {
            if *v == 0.0 && rng.random_bool(0.1) {
                *v = rng.random_range(-3.0..3.0f64).round();
            }
        }
    }
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0f64).round()).collect();
    let x0: Vec<f64> = (0..n).map(|j| rng.random_range(0.0..1.0) * upper[j]).collect();
    let b: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i][j] * x0[j]).sum()).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0f64)).collect();
    Lp::new(ObjSense::Min, c, SparseMatrix::from_dense(&a), vec![RowSense::Eq; m], b)
        .unwrap()
        .with_bounds(vec![0.0; n], upper)
        .unwrap()
}
