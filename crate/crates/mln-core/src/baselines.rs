//! Deterministic and randomized HOSVD baselines for comparison runs.

use crate::error::Result;
use crate::linalg::svd;
use crate::matrix::Matrix;
use crate::mln::TuckerTensor;
use crate::scalar::Real;
use crate::sketch::{draw_sketch, sketch_seed, SketchRole, SketchSpec};
use crate::tensor::{mode_product, mode_unfold, unfolding_product, DenseTensor};

fn truncated_left_vectors<F: Real>(m: &Matrix<F>, rank: usize) -> Result<Matrix<F>> {
    let f = svd(m)?;
    f.u.columns(0, rank)
}

fn core_from_factors<F: Real>(
    a: &DenseTensor<F>,
    factors: &[Matrix<F>],
) -> Result<DenseTensor<F>> {
    let mut core = a.clone();
    for (k, u) in factors.iter().enumerate() {
        core = mode_product(&core, k, &u.transposed())?;
    }
    Ok(core)
}

/// Higher-order SVD: factor `k` holds the `r_k` leading left singular
/// vectors of the mode-`k` unfolding; the core is `A` contracted by every
/// factor transposed. The error satisfies the classical bound by the root
/// of the summed squared singular-value tails.
pub fn hosvd<F: Real>(a: &DenseTensor<F>, ranks: &[usize]) -> Result<TuckerTensor<F>> {
    check_ranks(a.dims(), ranks)?;
    let mut factors = Vec::with_capacity(a.order());
    for (k, &r) in ranks.iter().enumerate() {
        factors.push(truncated_left_vectors(&mode_unfold(a, k)?, r)?);
    }
    TuckerTensor::new(core_from_factors(a, &factors)?, factors)
}

/// Randomized HOSVD: factor `k` holds the left singular vectors of the
/// sketched unfolding `A_(k) X_k` with a Gaussian `X_k`, so no full SVD of
/// any unfolding is ever taken.
pub fn rhosvd<F: Real>(a: &DenseTensor<F>, ranks: &[usize], seed: u64) -> Result<TuckerTensor<F>> {
    check_ranks(a.dims(), ranks)?;
    let total: usize = a.dims().iter().product();
    let mut factors = Vec::with_capacity(a.order());
    for (k, &r) in ranks.iter().enumerate() {
        let x: Matrix<F> = draw_sketch(&SketchSpec::gaussian(
            total / a.dims()[k],
            r,
            sketch_seed(seed, k, SketchRole::X),
        ))?;
        let sketched = unfolding_product(a, k, &x)?;
        factors.push(truncated_left_vectors(&sketched, r)?);
    }
    TuckerTensor::new(core_from_factors(a, &factors)?, factors)
}

/// Randomized sequentially truncated HOSVD: processes modes in fixed
/// ascending order, shrinking the working tensor after each mode, so the
/// mode-`k` sketch has only `(prod_{j<k} r_j) * (prod_{j>k} n_j)` rows.
pub fn rsthosvd<F: Real>(
    a: &DenseTensor<F>,
    ranks: &[usize],
    seed: u64,
) -> Result<TuckerTensor<F>> {
    check_ranks(a.dims(), ranks)?;
    let mut working = a.clone();
    let mut factors = Vec::with_capacity(a.order());
    for (k, &r) in ranks.iter().enumerate() {
        let total: usize = working.dims().iter().product();
        let x: Matrix<F> = draw_sketch(&SketchSpec::gaussian(
            total / working.dims()[k],
            r,
            sketch_seed(seed, k, SketchRole::X),
        ))?;
        let sketched = unfolding_product(&working, k, &x)?;
        let u = truncated_left_vectors(&sketched, r)?;
        working = mode_product(&working, k, &u.transposed())?;
        factors.push(u);
    }
    TuckerTensor::new(working, factors)
}

fn check_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    use crate::error::Error;
    if ranks.len() != dims.len() {
        return Err(Error::Rank(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            dims.len()
        )));
    }
    for (k, (&r, &n)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > n {
            return Err(Error::Rank(format!(
                "rank {r} infeasible for mode {k} of size {n}"
            )));
        }
    }
    Ok(())
}
