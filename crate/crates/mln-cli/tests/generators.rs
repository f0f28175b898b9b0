//! Generator self-checks: decay profiles against closed forms, spectra of
//! the rotated superdiagonal constructions, Hilbert entries, rank bounds of
//! the random Tucker tensors, the shared-sketch worst-case pair, and the
//! fail-fast behavior of both the parameter validation and the structural
//! validators.

use mln_cli::generators::{
    gen_adversarial, gen_cp_superdiag, gen_hilbert, gen_random_lowrank, superdiagonal,
    validate_adversarial, validate_cp_superdiag, validate_hilbert, validate_lowrank, Decay,
};
use mln_core::linalg::svd;
use mln_core::sketch::SketchKind;
use mln_core::tensor::mode_unfold;
use mln_core::Tensor64;

#[test]
fn decay_profiles_match_their_closed_forms() {
    assert_eq!(
        Decay::Exp(0.5).sigmas(5).unwrap(),
        vec![0.5, 0.25, 0.125, 0.0625, 0.03125]
    );
    let poly = Decay::Poly(2.0).sigmas(4).unwrap();
    let want = [1.0, 0.25, 1.0 / 9.0, 0.0625];
    for (got, want) in poly.iter().zip(want) {
        assert!((got - want).abs() <= 1e-15);
    }
    assert_eq!(Decay::Poly(1.0).sigmas(3).unwrap()[2], 1.0 / 3.0);
}

#[test]
fn plain_superdiagonal_is_zero_off_the_diagonal() {
    let sigmas = [0.9, 0.5, 0.2, 0.1];
    let t = superdiagonal(4, 3, &sigmas).unwrap();
    let mut idx = [0usize; 3];
    loop {
        let want = if idx[0] == idx[1] && idx[1] == idx[2] {
            sigmas[idx[0]]
        } else {
            0.0
        };
        assert_eq!(t.get(&idx), want, "entry {idx:?}");
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < 4 {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == 3 {
                return;
            }
        }
    }
}

#[test]
fn rotated_superdiagonal_keeps_the_spectrum_on_every_mode() {
    let t = gen_cp_superdiag(8, 3, Decay::Exp(0.5), 4).unwrap();
    let sigmas = Decay::Exp(0.5).sigmas(8).unwrap();
    validate_cp_superdiag(&t, &sigmas).unwrap();
    // Direct check on one mode, independent of the validator.
    let s = svd(&mode_unfold(&t, 1).unwrap()).unwrap().s;
    for (i, &want) in sigmas.iter().enumerate() {
        assert!((s[i] - want).abs() <= 1e-12, "sigma {i}: {} vs {want}", s[i]);
    }
    // The rotations moved mass off the superdiagonal.
    let off = t.get(&[1, 0, 0]).abs() + t.get(&[0, 1, 0]).abs() + t.get(&[2, 1, 0]).abs();
    assert!(off > 1e-6, "tensor looks unrotated");
}

#[test]
fn superdiagonal_generators_are_deterministic_per_seed() {
    let a = gen_cp_superdiag(6, 3, Decay::Poly(1.5), 9).unwrap();
    let b = gen_cp_superdiag(6, 3, Decay::Poly(1.5), 9).unwrap();
    assert_eq!(a.values(), b.values());
    let c = gen_cp_superdiag(6, 3, Decay::Poly(1.5), 10).unwrap();
    assert_ne!(a.values(), c.values());
}

#[test]
fn hilbert_entries_follow_the_shifted_harmonic_formula() {
    let t = gen_hilbert(3, 5).unwrap();
    validate_hilbert(&t).unwrap();
    for i in 0..5usize {
        for j in 0..5usize {
            for k in 0..5usize {
                assert_eq!(t.get(&[i, j, k]), 1.0 / (1.0 + (i + j + k) as f64));
            }
        }
    }
    assert_eq!(t.get(&[1, 2, 3]), 1.0 / 7.0);
    let q = gen_hilbert(4, 3).unwrap();
    validate_hilbert(&q).unwrap();
    assert_eq!(q.get(&[0, 0, 0, 0]), 1.0);
    assert_eq!(q.get(&[2, 2, 2, 2]), 1.0 / 9.0);
}

#[test]
fn lowrank_generator_respects_the_requested_rank_bounds() {
    let ranks = [3usize, 4, 2];
    let t = gen_random_lowrank(&[12, 10, 9], &ranks, 5).unwrap();
    assert_eq!(t.dims(), &[12, 10, 9]);
    validate_lowrank(&t, &ranks).unwrap();
    for (k, &r) in ranks.iter().enumerate() {
        let s = svd(&mode_unfold(&t, k).unwrap()).unwrap().s;
        assert!(s[r] <= 1e-10 * s[0], "mode {k} rank exceeds {r}");
        assert!(s[r - 1] > 1e-6 * s[0], "mode {k} rank collapsed below {r}");
    }
    let again = gen_random_lowrank(&[12, 10, 9], &ranks, 5).unwrap();
    assert_eq!(t.values(), again.values());
}

#[test]
fn adversarial_pair_is_mode_symmetric_with_shared_srht_sketches() {
    let (t, x_spec, y_spec) = gen_adversarial(Decay::Exp(0.3), 1).unwrap();
    assert_eq!(t.dims(), &[32, 32, 32, 32]);
    validate_adversarial(&t, &Decay::Exp(0.3).sigmas(32).unwrap()).unwrap();
    let s = svd(&mode_unfold(&t, 2).unwrap()).unwrap().s;
    assert!((s[0] - 0.3).abs() <= 1e-12, "leading singular value {}", s[0]);

    assert_eq!(x_spec.kind, SketchKind::Srht);
    assert_eq!((x_spec.rows, x_spec.cols), (32 * 32 * 32, 8));
    assert_eq!(y_spec.kind, SketchKind::Srht);
    assert_eq!((y_spec.rows, y_spec.cols), (32, 8));

    let (t2, x2, y2) = gen_adversarial(Decay::Exp(0.3), 1).unwrap();
    assert_eq!(t.values(), t2.values());
    assert_eq!(x_spec.seed, x2.seed);
    assert_eq!(y_spec.seed, y2.seed);
}

#[test]
fn generators_reject_bad_parameters() {
    assert!(Decay::Exp(0.0).sigmas(4).is_err());
    assert!(Decay::Exp(1.0).sigmas(4).is_err());
    assert!(Decay::Exp(-0.2).sigmas(4).is_err());
    assert!(Decay::Poly(0.0).sigmas(4).is_err());
    assert!(Decay::Poly(-1.0).sigmas(4).is_err());

    assert!(superdiagonal(0, 3, &[]).is_err());
    assert!(superdiagonal(3, 1, &[1.0, 0.5, 0.2]).is_err());
    assert!(superdiagonal(3, 3, &[1.0]).is_err());

    assert!(gen_random_lowrank(&[], &[], 0).is_err());
    assert!(gen_random_lowrank(&[5, 5], &[2], 0).is_err());
    assert!(gen_random_lowrank(&[5, 5], &[0, 2], 0).is_err());
    assert!(gen_random_lowrank(&[5, 5], &[2, 6], 0).is_err());

    assert!(gen_hilbert(0, 5).is_err());
    assert!(gen_hilbert(3, 0).is_err());

    assert!(gen_adversarial(Decay::Exp(1.5), 0).is_err());
}

fn perturbed(t: &Tensor64, flat: usize, delta: f64) -> Tensor64 {
    let mut values = t.values().to_vec();
    values[flat] += delta;
    Tensor64::new(t.dims().to_vec(), values).unwrap()
}

#[test]
fn validators_catch_structural_damage() {
    let sigmas = Decay::Exp(0.5).sigmas(6).unwrap();
    let t = gen_cp_superdiag(6, 3, Decay::Exp(0.5), 2).unwrap();
    assert!(validate_cp_superdiag(&perturbed(&t, 17, 1e-3), &sigmas).is_err());

    let h = gen_hilbert(3, 4).unwrap();
    assert!(validate_hilbert(&perturbed(&h, 0, 1e-6)).is_err());

    let lr = gen_random_lowrank(&[8, 8, 8], &[2, 2, 2], 3).unwrap();
    assert!(validate_lowrank(&perturbed(&lr, 100, 0.5), &[2, 2, 2]).is_err());
    assert!(validate_lowrank(&lr, &[1, 1, 1]).is_err());
}
