//! Helpers shared by the integration test suites.
#![allow(dead_code)]

use mln_core::linalg::economy_qr;
use mln_core::matrix::Matrix;
use mln_core::mln::TuckerTensor;
use mln_core::sketch::{mix_seed, SeededRng};
use mln_core::tensor::{mode_product, DenseTensor};
use mln_core::{Matrix64, Real, Tensor64, Tucker64};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix64 {
    let mut rng = SeededRng::new(seed, 0);
    Matrix::from_fn(rows, cols, |_, _| f64::standard_normal(&mut rng))
}

/// Square orthogonal matrix: Q-factor of a seeded Gaussian.
pub fn haar_orthogonal(n: usize, seed: u64) -> Matrix64 {
    economy_qr(&gaussian_matrix(n, n, seed)).unwrap().q
}

pub fn diag_matrix(entries: &[f64]) -> Matrix64 {
    let n = entries.len();
    Matrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { 0.0 })
}

/// Dense tensor with seeded standard normal entries.
pub fn gaussian_tensor(dims: &[usize], seed: u64) -> Tensor64 {
    let len: usize = dims.iter().product();
    let m = gaussian_matrix(len, 1, seed);
    DenseTensor::new(dims.to_vec(), m.into_values()).unwrap()
}

/// Random Tucker-format tensor: Gaussian core, Gaussian factors.
pub fn random_tucker(dims: &[usize], ranks: &[usize], seed: u64) -> Tucker64 {
    let core = gaussian_tensor(ranks, mix_seed(seed, 900));
    let factors = dims
        .iter()
        .zip(ranks)
        .enumerate()
        .map(|(k, (&n, &r))| gaussian_matrix(n, r, mix_seed(seed, 901 + k as u64)))
        .collect();
    TuckerTensor::new(core, factors).unwrap()
}

/// Dense tensor of exact multilinear rank at most `ranks`.
pub fn random_low_rank_tensor(dims: &[usize], ranks: &[usize], seed: u64) -> Tensor64 {
    random_tucker(dims, ranks, seed).densify().unwrap()
}

/// Superdiagonal tensor with the given values, rotated on every mode by a
/// seeded orthogonal factor: each unfolding has exactly these singular
/// values (padded with zeros).
pub fn rotated_superdiag(n: usize, d: usize, sigmas: &[f64], seed: u64) -> Tensor64 {
    assert!(sigmas.len() <= n);
    let mut t = DenseTensor::zeros(vec![n; d]).unwrap();
    for (i, &s) in sigmas.iter().enumerate() {
        t.set(&vec![i; d], s);
    }
    for k in 0..d {
        let q = haar_orthogonal(n, mix_seed(seed, 700 + k as u64));
        t = mode_product(&t, k, &q).unwrap();
    }
    t
}

/// Geometric singular value profile `base^(i+1)`, `i = 0..n`.
pub fn geometric_sigmas(base: f64, n: usize) -> Vec<f64> {
    (1..=n as i32).map(|i| base.powi(i)).collect()
}

pub fn relative_error(a: &Tensor64, b: &Tensor64) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / a.frobenius_norm()
}

pub fn relative_error_m(a: &Matrix64, b: &Matrix64) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / a.frobenius_norm()
}

pub fn max_abs_diff(a: &Matrix64, b: &Matrix64) -> f64 {
    a.sub(b).unwrap().max_abs()
}

/// `||Q^T Q - I||_F`: departure from orthonormal columns.
pub fn orthonormality_defect(q: &Matrix64) -> f64 {
    let mut gram = q.t_mul(q).unwrap();
    for j in 0..gram.cols() {
        let v = gram.get(j, j) - 1.0;
        gram.set(j, j, v);
    }
    gram.frobenius_norm()
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
