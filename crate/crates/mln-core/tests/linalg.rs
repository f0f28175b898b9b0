//! QR, SVD, pseudoinverse, triangular solve and spectral norm, pinned
//! against hand values and randomized oracles.

mod common;

use common::*;
use mln_core::linalg::{
    economy_qr, eps_pseudoinverse, orthonormal_complement, solve_upper_triangular, spectral_norm,
    svd,
};
use mln_core::matrix::Matrix;
use mln_core::sketch::mix_seed;
use mln_core::tensor::mode_unfold;
use mln_core::{Error, Matrix64};
use proptest::prelude::*;

#[test]
fn qr_of_identity_is_exact() {
    let i3: Matrix64 = Matrix::identity(3);
    let f = economy_qr(&i3).unwrap();
    assert_eq!(f.q, i3);
    assert_eq!(f.r, i3);
}

#[test]
fn qr_of_a_single_column_gives_the_normalized_column() {
    let m: Matrix64 = Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
    let f = economy_qr(&m).unwrap();
    assert!((f.r.get(0, 0).abs() - 5.0).abs() <= 1e-14);
    assert!((f.q.get(0, 0).abs() - 0.6).abs() <= 1e-14);
    assert!((f.q.get(1, 0).abs() - 0.8).abs() <= 1e-14);
    assert!(max_abs_diff(&f.q.mul(&f.r).unwrap(), &m) <= 1e-14);
}

#[test]
fn qr_rejects_wide_input() {
    let m = gaussian_matrix(2, 3, 0);
    assert!(matches!(economy_qr(&m), Err(Error::Shape(_))));
}

#[test]
fn svd_of_a_diagonal_is_the_diagonal() {
    let f = svd(&diag_matrix(&[3.0, 1.0])).unwrap();
    assert_eq!(f.s, vec![3.0, 1.0]);
}

#[test]
fn svd_of_rank_one_has_one_singular_value() {
    // u v^T with ||u|| = 2, ||v|| = 5: the single singular value is 10.
    let mut u = gaussian_matrix(6, 1, 10);
    u.scale_in_place(2.0 / u.frobenius_norm());
    let mut v = gaussian_matrix(5, 1, 11);
    v.scale_in_place(5.0 / v.frobenius_norm());
    let a = u.mul_t(&v).unwrap();
    let f = svd(&a).unwrap();
    assert!((f.s[0] - 10.0).abs() <= 1e-10);
    for &tail in &f.s[1..] {
        assert!(tail <= 1e-10);
    }
}

#[test]
fn unfolding_singular_values_match_planted_spectrum() {
    let sigmas = geometric_sigmas(0.5, 12);
    let t = rotated_superdiag(12, 3, &sigmas, 21);
    for k in 0..3 {
        let f = svd(&mode_unfold(&t, k).unwrap()).unwrap();
        for (i, &expected) in sigmas.iter().enumerate() {
            assert!(
                (f.s[i] - expected).abs() <= 1e-10 * sigmas[0],
                "mode {k} singular value {i}: {} vs {expected}",
                f.s[i]
            );
        }
    }
}

#[test]
fn pseudoinverse_truncates_below_the_threshold() {
    let p = eps_pseudoinverse(&diag_matrix(&[3.0, 1.0, 1e-20]), 1e-8).unwrap();
    let expected = diag_matrix(&[1.0 / 3.0, 1.0, 0.0]);
    assert!(max_abs_diff(&p, &expected) <= 1e-15);
}

#[test]
fn pseudoinverse_of_zero_is_zero_transposed() {
    let z = Matrix::zeros(3, 2);
    let p = eps_pseudoinverse(&z, 0.0).unwrap();
    assert_eq!(p, Matrix::zeros(2, 3));
}

#[test]
fn pseudoinverse_above_all_singular_values_is_zero() {
    let p = eps_pseudoinverse(&diag_matrix(&[3.0, 1.0]), 10.0).unwrap();
    assert_eq!(p, Matrix::zeros(2, 2));
}

#[test]
fn zero_threshold_inverts_only_the_numerically_nonzero_part() {
    let p = eps_pseudoinverse(&diag_matrix(&[3.0, 1.0, 1e-20]), 0.0).unwrap();
    let expected = diag_matrix(&[1.0 / 3.0, 1.0, 0.0]);
    assert!(max_abs_diff(&p, &expected) <= 1e-15);
}

#[test]
fn pseudoinverse_rejects_negative_threshold() {
    let m = diag_matrix(&[1.0]);
    assert!(matches!(
        eps_pseudoinverse(&m, -1.0),
        Err(Error::Rank(_))
    ));
}

/// 200 cases against the brute-force oracle: plant A = U diag(s) V^T with a
/// known spectrum, pick a threshold between two singular values, and compare
/// against V diag(1/s kept) U^T assembled by hand.
#[test]
fn pseudoinverse_matches_planted_spectra() {
    for case in 0..200u64 {
        let rows = 4 + (case % 5) as usize;
        let cols = 3 + (case % 4) as usize;
        let rank = cols.min(rows);
        let u = economy_qr(&gaussian_matrix(rows, rank, mix_seed(31, case)))
            .unwrap()
            .q;
        let v = economy_qr(&gaussian_matrix(cols, rank, mix_seed(32, case)))
            .unwrap()
            .q;
        let sigmas: Vec<f64> = (0..rank).map(|i| 2.0f64.powi(-(i as i32))).collect();
        let keep = 1 + (case as usize % rank);
        // Threshold strictly between sigma_{keep-1} and sigma_keep.
        let eps = if keep == rank {
            sigmas[rank - 1] / 2.0
        } else {
            (sigmas[keep] * sigmas[keep - 1]).sqrt()
        };
        let mut us = u.clone();
        for j in 0..rank {
            for x in us.col_mut(j) {
                *x *= sigmas[j];
            }
        }
        let a = us.mul_t(&v).unwrap();
        let p = eps_pseudoinverse(&a, eps).unwrap();
        let mut vk = v.columns(0, keep).unwrap();
        for j in 0..keep {
            for x in vk.col_mut(j) {
                *x /= sigmas[j];
            }
        }
        let oracle = vk.mul_t(&u.columns(0, keep).unwrap()).unwrap();
        assert!(
            max_abs_diff(&p, &oracle) <= 1e-12 / sigmas[keep - 1],
            "case {case}: pseudoinverse disagrees with planted oracle"
        );
    }
}

#[test]
fn pseudoinverse_norm_is_capped_by_the_threshold() {
    for seed in 0..5u64 {
        let a = gaussian_matrix(12, 7, mix_seed(33, seed));
        let eps = 0.5;
        let p = eps_pseudoinverse(&a, eps).unwrap();
        if p.frobenius_norm() > 0.0 {
            assert!(spectral_norm(&p).unwrap() <= 1.0 / eps + 1e-12);
        }
    }
}

#[test]
fn right_triangular_solve_with_identity_returns_the_input() {
    let b = gaussian_matrix(3, 4, 40);
    let x = solve_upper_triangular(&Matrix::identity(4), &b).unwrap();
    assert_eq!(x, b);
}

#[test]
fn right_triangular_solve_small_case() {
    let r = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 4.0]]).unwrap();
    let b = Matrix::from_rows(&[vec![2.0, 5.0]]).unwrap();
    let x = solve_upper_triangular(&r, &b).unwrap();
    assert!(max_abs_diff(&x, &Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap()) <= 1e-14);
}

#[test]
fn right_triangular_solve_reports_singular_diagonal() {
    let r = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let b = Matrix::from_rows(&[vec![2.0, 5.0]]).unwrap();
    assert!(matches!(
        solve_upper_triangular(&r, &b),
        Err(Error::SingularTriangular { index: 1, .. })
    ));
}

#[test]
fn spectral_norm_of_a_diagonal_is_its_largest_entry() {
    assert!((spectral_norm(&diag_matrix(&[2.0, 7.0, 1.0])).unwrap() - 7.0).abs() <= 1e-12);
}

#[test]
fn spectral_norm_power_iteration_path_matches_known_value() {
    // 1030 > 1024 forces the power-iteration path; top of the spectrum is 1
    // with a 1/2 gap, so 200 iterations converge far past 1e-6.
    let n = 1030;
    let m = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 / (i + 1) as f64
        } else {
            0.0
        }
    });
    assert!((spectral_norm(&m).unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn complement_completes_the_basis() {
    let q = economy_qr(&gaussian_matrix(9, 4, 50)).unwrap().q;
    let c = orthonormal_complement(&q).unwrap();
    assert_eq!((c.rows(), c.cols()), (9, 5));
    assert!(orthonormality_defect(&c) <= 1e-12);
    assert!(q.t_mul(&c).unwrap().max_abs() <= 1e-12);
    // q q^T + c c^T resolves the identity.
    let complement_part: Matrix64 = Matrix::identity(9).sub(&c.mul_t(&c).unwrap()).unwrap();
    let resolution = q.mul_t(&q).unwrap().sub(&complement_part).unwrap();
    assert!(resolution.max_abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qr_factors_are_orthonormal_and_reconstruct(
        rows in 1..=16usize,
        cols in 1..=16usize,
        seed in any::<u64>(),
    ) {
        prop_assume!(rows >= cols);
        let m = gaussian_matrix(rows, cols, seed);
        let f = economy_qr(&m).unwrap();
        prop_assert!(orthonormality_defect(&f.q) <= 1e-12 * (cols as f64).sqrt());
        prop_assert!(
            f.q.mul(&f.r).unwrap().sub(&m).unwrap().frobenius_norm()
                <= 1e-12 * m.frobenius_norm()
        );
        for j in 0..cols {
            for i in (j + 1)..cols {
                prop_assert_eq!(f.r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn svd_reconstructs_with_orthonormal_factors(
        rows in 1..=14usize,
        cols in 1..=14usize,
        seed in any::<u64>(),
    ) {
        let m = gaussian_matrix(rows, cols, seed);
        let f = svd(&m).unwrap();
        let kmin = rows.min(cols);
        prop_assert!(orthonormality_defect(&f.u) <= 1e-12 * (kmin as f64).sqrt());
        prop_assert!(orthonormality_defect(&f.v) <= 1e-12 * (kmin as f64).sqrt());
        for w in f.s.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let mut us = f.u.clone();
        for j in 0..kmin {
            for x in us.col_mut(j) {
                *x *= f.s[j];
            }
        }
        let recon = us.mul_t(&f.v).unwrap();
        prop_assert!(
            recon.sub(&m).unwrap().frobenius_norm() <= 1e-11 * m.frobenius_norm().max(1.0)
        );
        // Sign convention: first entry of each left vector that is not
        // negligible relative to the column maximum is nonnegative.
        for j in 0..kmin {
            let col = f.u.col(j);
            let mx = col.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if mx > 0.0 {
                let lead = col.iter().find(|x| x.abs() > 1e-8 * mx).unwrap();
                prop_assert!(*lead >= 0.0);
            }
        }
    }

    #[test]
    fn pseudoinverse_satisfies_moore_penrose_identities(seed in any::<u64>()) {
        let a = gaussian_matrix(10, 6, seed);
        let p = eps_pseudoinverse(&a, 0.0).unwrap();
        let apa = a.mul(&p).unwrap().mul(&a).unwrap();
        let pap = p.mul(&a).unwrap().mul(&p).unwrap();
        prop_assert!(apa.sub(&a).unwrap().frobenius_norm() <= 1e-10 * a.frobenius_norm());
        prop_assert!(pap.sub(&p).unwrap().frobenius_norm() <= 1e-10 * p.frobenius_norm());
        // Symmetry of the two projectors.
        let ap = a.mul(&p).unwrap();
        prop_assert!(ap.sub(&ap.transposed()).unwrap().frobenius_norm() <= 1e-10);
        let pa = p.mul(&a).unwrap();
        prop_assert!(pa.sub(&pa.transposed()).unwrap().frobenius_norm() <= 1e-10);
    }

    #[test]
    fn triangular_solve_residual_is_small(
        n in 1..=10usize,
        q in 1..=6usize,
        seed in any::<u64>(),
    ) {
        // Diagonally dominant upper triangular factor: well conditioned.
        let mut r = gaussian_matrix(n, n, seed);
        for j in 0..n {
            for i in (j + 1)..n {
                r.set(i, j, 0.0);
            }
            let boost = 4.0 + r.get(j, j).abs();
            r.set(j, j, boost);
        }
        let b = gaussian_matrix(q, n, mix_seed(seed, 3));
        let x = solve_upper_triangular(&r, &b).unwrap();
        prop_assert!(
            x.mul(&r).unwrap().sub(&b).unwrap().frobenius_norm()
                <= 1e-10 * b.frobenius_norm().max(1.0)
        );
    }

    #[test]
    fn spectral_norm_agrees_with_svd(rows in 1..=12usize, cols in 1..=12usize, seed in any::<u64>()) {
        let m = gaussian_matrix(rows, cols, seed);
        let s = svd(&m).unwrap().s[0];
        prop_assert!((spectral_norm(&m).unwrap() - s).abs() <= 1e-12 * s.max(1.0));
    }
}
