//! HOSVD-family baselines: exactness, the classical tail bound,
//! all-orthogonality of the core, and randomized variants tracking the
//! deterministic method.

mod common;

use common::*;
use mln_core::baselines::{hosvd, rhosvd, rsthosvd};
use mln_core::linalg::svd;
use mln_core::tensor::{mode_product, mode_unfold, DenseTensor};
use mln_core::Error;

#[test]
fn full_ranks_reproduce_the_input() {
    let a = gaussian_tensor(&[7, 6, 8], 11);
    let full = hosvd(&a, &[7, 6, 8]).unwrap();
    assert!(relative_error(&a, &full.densify().unwrap()) <= 1e-11);
}

#[test]
fn randomized_variants_reproduce_exact_rank() {
    for seed in 0..3u64 {
        let t = random_low_rank_tensor(&[8, 7, 9], &[3, 2, 4], seed);
        let r = rhosvd(&t, &[3, 2, 4], seed).unwrap();
        assert!(relative_error(&t, &r.densify().unwrap()) <= 1e-10);
        let s = rsthosvd(&t, &[3, 2, 4], seed).unwrap();
        assert!(relative_error(&t, &s.densify().unwrap()) <= 1e-10);
    }
}

/// On a rank-r matrix seen as a 2-tensor, the first factor captures the
/// column space exactly, which is precisely what the rangefinder computes
/// from the same kind of sketch.
#[test]
fn matrix_case_captures_the_column_space() {
    let m = gaussian_matrix(20, 3, 1)
        .mul(&gaussian_matrix(3, 15, 2))
        .unwrap();
    let t = DenseTensor::new(vec![20, 15], m.values().to_vec()).unwrap();
    let run = rhosvd(&t, &[3, 3], 0).unwrap();
    let u0 = run.factor(0);
    assert!(orthonormality_defect(u0) <= 1e-12);
    let projected = u0.mul(&u0.t_mul(&m).unwrap()).unwrap();
    assert!(relative_error_m(&m, &projected) <= 1e-10);
}

/// Classical truncation bound: the error is at most the root of the summed
/// squared singular-value tails of the matricizations, which in turn is at
/// most sqrt(d) times the worst single tail.
#[test]
fn truncation_error_respects_the_tail_bound() {
    let a = rotated_superdiag(12, 3, &geometric_sigmas(0.5, 12), 33);
    let ranks = [5usize, 6, 7];
    let h = hosvd(&a, &ranks).unwrap();
    let err = a.sub(&h.densify().unwrap()).unwrap().frobenius_norm();
    let mut summed = 0.0f64;
    let mut worst = 0.0f64;
    for (k, &r) in ranks.iter().enumerate() {
        let s = svd(&mode_unfold(&a, k).unwrap()).unwrap().s;
        let tail2: f64 = s[r..].iter().map(|&x| x * x).sum();
        summed += tail2;
        worst = worst.max(tail2.sqrt());
    }
    assert!(err <= summed.sqrt() * (1.0 + 1e-8));
    assert!(err <= 3.0f64.sqrt() * worst * (1.0 + 1e-8));
}

#[test]
fn factors_are_orthonormal_and_the_core_all_orthogonal() {
    let a = gaussian_tensor(&[12, 10, 11], 17);
    let truncated = hosvd(&a, &[5, 4, 6]).unwrap();
    for u in truncated.factors() {
        assert!(orthonormality_defect(u) <= 1e-12);
    }
    // Rows of every unfolding of the full core are mutually orthogonal
    // (their Gram matrices are the squared singular values), so off the
    // diagonal everything is roundoff. Truncation couples the discarded
    // tail back in, so the clean statement is about full ranks.
    let full = hosvd(&a, &[12, 10, 11]).unwrap();
    let scale = full.core().frobenius_norm().powi(2);
    for k in 0..3 {
        let g = mode_unfold(full.core(), k).unwrap();
        let gram = g.mul_t(&g).unwrap();
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                if i != j {
                    assert!(gram.get(i, j).abs() <= 1e-10 * scale);
                }
            }
        }
    }
}

#[test]
fn sketched_factors_track_hosvd_on_geometric_decay() {
    let a = rotated_superdiag(12, 3, &geometric_sigmas(0.5, 12), 33);
    let e_hosvd = relative_error(&a, &hosvd(&a, &[6, 6, 6]).unwrap().densify().unwrap());
    for seed in 0..10u64 {
        let e = relative_error(&a, &rhosvd(&a, &[6, 6, 6], seed).unwrap().densify().unwrap());
        assert!(
            e <= 10.0 * e_hosvd,
            "seed {seed}: {e:.3e} vs hosvd {e_hosvd:.3e}"
        );
    }
}

#[test]
fn sequential_truncation_tracks_hosvd_on_polynomial_decay() {
    let sigmas: Vec<f64> = (1..=12u32).map(|i| 1.0 / f64::from(i * i)).collect();
    let a = rotated_superdiag(12, 3, &sigmas, 40);
    let e_hosvd = relative_error(&a, &hosvd(&a, &[6, 6, 6]).unwrap().densify().unwrap());
    for seed in 0..10u64 {
        let e = relative_error(&a, &rsthosvd(&a, &[6, 6, 6], seed).unwrap().densify().unwrap());
        assert!(
            e <= 10.0 * e_hosvd,
            "seed {seed}: {e:.3e} vs hosvd {e_hosvd:.3e}"
        );
    }
}

/// Replaying the ascending-mode sweep with the returned factors telescopes
/// the total error: it never exceeds the sum of the per-step truncation
/// errors.
#[test]
fn sequential_truncation_error_telescopes() {
    let a = rotated_superdiag(12, 3, &geometric_sigmas(0.5, 12), 33);
    let ranks = [5usize, 4, 6];
    let run = rsthosvd(&a, &ranks, 3).unwrap();
    assert_eq!(run.core().dims(), &ranks);
    let mut working = a.clone();
    let mut step_sum = 0.0f64;
    for k in 0..3 {
        let u = run.factor(k);
        assert_eq!((u.rows(), u.cols()), (12, ranks[k]));
        let contracted = mode_product(&working, k, &u.transposed()).unwrap();
        let replayed = mode_product(&contracted, k, u).unwrap();
        step_sum += working.sub(&replayed).unwrap().frobenius_norm();
        working = contracted;
    }
    let total = a.sub(&run.densify().unwrap()).unwrap().frobenius_norm();
    assert!(total <= step_sum * (1.0 + 1e-8));
}

#[test]
fn infeasible_ranks_are_rejected() {
    let a = gaussian_tensor(&[5, 4, 3], 0);
    assert!(matches!(hosvd(&a, &[2, 2]), Err(Error::Rank(_))));
    assert!(matches!(hosvd(&a, &[6, 2, 2]), Err(Error::Rank(_))));
    assert!(matches!(rhosvd(&a, &[0, 2, 2], 0), Err(Error::Rank(_))));
    assert!(matches!(rsthosvd(&a, &[2, 2, 4], 0), Err(Error::Rank(_))));
}
