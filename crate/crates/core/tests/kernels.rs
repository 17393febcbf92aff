mod common;

use ccpdhg::kkt::{absolute_violation, relative_report, relative_report_with_products};
use ccpdhg::mps::{parse_mps, write_mps};
use ccpdhg::pdhg::estimate_matrix_norm;
use ccpdhg::scaling::ruiz_scale;
use ccpdhg::standard::to_standard_form;
use ccpdhg::{Iterate, SparseMatrix};
use common::strategies::{boxed_lp, sparse_dense};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

proptest! {
    #[test]
    fn products_match_dense(a in sparse_dense(7, 7), seed in 0u64..1000) {
        let (m, n) = (a.len(), a[0].len());
        let s = SparseMatrix::from_dense(&a);
        let x: Vec<f64> = (0..n).map(|j| ((j as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
        let y: Vec<f64> = (0..m).map(|i| ((i as u64 * 13 + seed) % 11) as f64 - 5.0).collect();
        let ax = s.matvec(&x).unwrap();
        let aty = s.matvec_transpose(&y).unwrap();
        for (p, q) in ax.iter().zip(dense_mul(&a, &x)) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
        for (p, q) in aty.iter().zip(dense_mul(&transpose(&a), &y)) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
        let scale = 1.0 + dot(&y.iter().map(|v| v.abs()).collect::<Vec<_>>(), &dense_mul(
            &a.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect::<Vec<_>>(),
            &x.iter().map(|v| v.abs()).collect::<Vec<_>>(),
        ));
        prop_assert!((dot(&y, &ax) - dot(&aty, &x)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn power_norm_close_to_largest_singular_value(a in sparse_dense(12, 12), seed in 0u64..100) {
        let s = SparseMatrix::from_dense(&a);
        let d = DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j]);
        let sigma = d.singular_values().max();
        let est: f64 = estimate_matrix_norm(&s, 500, seed);
        if sigma == 0.0 {
            prop_assert_eq!(est, 0.0);
        } else {
            prop_assert!(est <= sigma * (1.0 + 1e-9));
            prop_assert!(est >= 0.99 * sigma, "estimate {} vs {}", est, sigma);
        }
    }

    #[test]
    fn mps_parse_serialize_parse_is_a_fixed_point(lp in boxed_lp()) {
        let text = write_mps(&lp);
        let once = parse_mps::<f64>(&text).unwrap();
        let twice = parse_mps::<f64>(&write_mps(&once)).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.matrix.to_dense(), lp.matrix.to_dense());
        for i in 0..lp.nrows() {
            prop_assert_eq!(once.row_bounds(i), lp.row_bounds(i));
        }
        prop_assert_eq!(&once.objective, &lp.objective);
        prop_assert_eq!(&once.col_upper, &lp.col_upper);
    }

    #[test]
    fn standard_form_round_trip_is_exact(lp in boxed_lp(), vals in prop::collection::vec(-5.0..5.0f64, 16)) {
        let map = to_standard_form(&lp);
        let (m, n) = (lp.nrows(), lp.ncols());
        let it = Iterate { x: vals[..n].to_vec(), y: vals[5..5 + m].to_vec(), z: vals[8..8 + n].to_vec(), k: 0 };
        let std_it = map.map_iterate(&it).unwrap();
        prop_assert_eq!(map.unmap_iterate(&std_it).unwrap(), it.clone());
        // same objective, and equality rows satisfied exactly where the original rows were
        let std_obj = dot(&map.lp.objective, &std_it.x);
        prop_assert!((map.unmap_objective(std_obj) - lp.objective_value(&it.x)).abs() <= 1e-12);
        let ax = map.lp.matrix.matvec(&std_it.x).unwrap();
        for i in 0..m {
            if map.slack_of_row(i).is_some() {
                prop_assert!((ax[i] - map.lp.rhs[i]).abs() <= 1e-12 * (1.0 + ax[i].abs()));
            }
        }
    }

    #[test]
    fn scaling_round_trip_and_objective(lp in boxed_lp(), vals in prop::collection::vec(-5.0..5.0f64, 5)) {
        let std = to_standard_form(&lp).lp;
        let (scaled, info) = ruiz_scale(&std, 10);
        prop_assert_eq!(info.unapply(&scaled), std.clone());
        let x = vals[..std.ncols().min(5)].iter().copied().chain(std::iter::repeat(0.0)).take(std.ncols()).collect::<Vec<_>>();
        let xs = info.scale_primal(&x);
        prop_assert_eq!(info.unscale_primal(&xs), x.clone());
        // c'x' = c x and A'x' = R A x, exact with power-of-two factors
        prop_assert_eq!(dot(&scaled.objective, &xs), dot(&std.objective, &x));
        let ax = std.matrix.matvec(&x).unwrap();
        let axs = scaled.matrix.matvec(&xs).unwrap();
        for i in 0..std.nrows() {
            prop_assert!((axs[i] - info.row[i] * ax[i]).abs() <= 1e-12 * (1.0 + axs[i].abs()));
        }
    }

    #[test]
    fn relative_report_is_reproducible(lp in boxed_lp(), vals in prop::collection::vec(-5.0..5.0f64, 13)) {
        let (m, n) = (lp.nrows(), lp.ncols());
        let it = Iterate { x: vals[..n].to_vec(), y: vals[5..5 + m].to_vec(), z: vals[8..8 + n].to_vec(), k: 3 };
        let a = relative_report(&lp, &it).unwrap();
        let b = relative_report(&lp, &it).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let ax = lp.matrix.matvec(&it.x).unwrap();
        let aty = lp.matrix.matvec_transpose(&it.y).unwrap();
        prop_assert_eq!(relative_report_with_products(&lp, &it, &ax, &aty), a);
        prop_assert_eq!(a.maxresid_rel, a.rel_primal.max(a.rel_dual).max(a.rel_gap));
    }

    #[test]
    fn violation_moves_at_most_linearly_in_x(
        lp in boxed_lp(),
        vals in prop::collection::vec(-5.0..5.0f64, 13),
        dir in prop::collection::vec(-1.0..1.0f64, 5),
        delta in 1e-6..1e-2f64,
    ) {
        let (m, n) = (lp.nrows(), lp.ncols());
        let it = Iterate { x: vals[..n].to_vec(), y: vals[5..5 + m].to_vec(), z: vals[8..8 + n].to_vec(), k: 0 };
        let mut moved = it.clone();
        for j in 0..n {
            moved.x[j] += delta * dir[j];
        }
        let a_inf = lp.matrix.to_dense().iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let dual_max = it.y.iter().chain(&it.z).fold(1.0f64, |acc, v| acc.max(v.abs()));
        let bound = delta * a_inf.max(1.0) * dual_max;
        let change = (absolute_violation(&lp, &moved).unwrap() - absolute_violation(&lp, &it).unwrap()).abs();
        prop_assert!(change <= bound * (1.0 + 1e-9) + 1e-12, "change {} bound {}", change, bound);
    }
}
