//! Synthetic test tensors: rotated superdiagonal constructions with chosen
//! spectra, Hilbert tensors, random bounded-rank tensors, and the
//! shared-sketch worst-case setup. Every generator has a `validate_*`
//! counterpart that re-derives its structural property from the finished
//! tensor, so experiments can fail fast on a bad build instead of producing
//! plausible-looking numbers.

use anyhow::{ensure, Result};
use mln_core::linalg::{economy_qr, spectral_norm, svd};
use mln_core::mln::TuckerTensor;
use mln_core::sketch::{draw_sketch, mix_seed, SketchSpec};
use mln_core::tensor::{mode_product, mode_unfold, unfolding_product, DenseTensor};
use mln_core::{Matrix64, Tensor64};

const SALT_ROTATION: u64 = 0x101;
const SALT_CORE: u64 = 0x102;
const SALT_FACTOR: u64 = 0x200;
const SALT_SHARED_X: u64 = 0x301;
const SALT_SHARED_Y: u64 = 0x400;

/// Number of shared right-sketch candidates the worst-case generator ranks.
const UNFAVORABLE_CANDIDATES: u64 = 16;

/// Singular value profile of a generated spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `sigma_i = rate^i`, so `exp(0.5)` over five values gives
    /// `0.5, 0.25, 0.125, 0.0625, 0.03125`.
    Exp(f64),
    /// `sigma_i = 1 / i^power`.
    Poly(f64),
}

impl Decay {
    pub fn sigmas(&self, n: usize) -> Result<Vec<f64>> {
        match *self {
            Decay::Exp(rate) => {
                ensure!(
                    rate > 0.0 && rate < 1.0,
                    "exponential decay rate must lie in (0, 1), got {rate}"
                );
                Ok((1..=n).map(|i| rate.powi(i as i32)).collect())
            }
            Decay::Poly(power) => {
                ensure!(power > 0.0, "polynomial decay power must be positive, got {power}");
                Ok((1..=n).map(|i| (i as f64).powf(-power)).collect())
            }
        }
    }
}

fn haar_factor(n: usize, seed: u64) -> Result<Matrix64> {
    let g: Matrix64 = draw_sketch(&SketchSpec::gaussian(n, n, seed))?;
    Ok(economy_qr(&g)?.q)
}

/// Superdiagonal tensor with `sigmas[i]` at position `(i, i, ..., i)`.
pub fn superdiagonal(n: usize, d: usize, sigmas: &[f64]) -> Result<Tensor64> {
    ensure!(n >= 1, "superdiagonal tensors need n >= 1");
    ensure!(d >= 2, "superdiagonal tensors need at least two modes");
    ensure!(sigmas.len() == n, "expected {n} sigmas, got {}", sigmas.len());
    let mut t = DenseTensor::zeros(vec![n; d])?;
    for (i, &s) in sigmas.iter().enumerate() {
        t.set(&vec![i; d], s);
    }
    Ok(t)
}

/// Superdiagonal spectrum rotated by an independent Haar-distributed
/// orthogonal factor on every mode. Each matricization keeps the sigmas as
/// its singular values.
pub fn gen_cp_superdiag(n: usize, d: usize, decay: Decay, seed: u64) -> Result<Tensor64> {
    let sigmas = decay.sigmas(n)?;
    let mut t = superdiagonal(n, d, &sigmas)?;
    for k in 0..d {
        let q = haar_factor(n, mix_seed(seed, SALT_ROTATION + k as u64))?;
        t = mode_product(&t, k, &q)?;
    }
    Ok(t)
}

/// Checks that every matricization of `t` has exactly the singular values
/// `sigmas` (padded by zeros), to absolute accuracy 1e-10.
pub fn validate_cp_superdiag(t: &Tensor64, sigmas: &[f64]) -> Result<()> {
    for k in 0..t.order() {
        let s = svd(&mode_unfold(t, k)?)?.s;
        ensure!(
            s.len() >= sigmas.len(),
            "mode {k} unfolding has fewer singular values than sigmas"
        );
        for (i, sv) in s.iter().enumerate() {
            let want = sigmas.get(i).copied().unwrap_or(0.0);
            ensure!(
                (sv - want).abs() <= 1e-10,
                "mode {k} singular value {i}: got {sv:.6e}, expected {want:.6e}"
            );
        }
    }
    Ok(())
}

/// Hilbert tensor: entry `1 / (i_1 + ... + i_d - (d - 1))` in one-based
/// indexing, i.e. `1 / (1 + sum of zero-based indices)`.
pub fn gen_hilbert(d: usize, n: usize) -> Result<Tensor64> {
    ensure!(d >= 1 && n >= 1, "hilbert tensors need d >= 1 and n >= 1");
    let mut t = DenseTensor::zeros(vec![n; d])?;
    let mut idx = vec![0usize; d];
    loop {
        let sum: usize = idx.iter().sum();
        t.set(&idx, 1.0 / (1.0 + sum as f64));
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return Ok(t);
            }
        }
    }
}

/// Spot-checks the Hilbert formula on the corners and the all-ones entry.
pub fn validate_hilbert(t: &Tensor64) -> Result<()> {
    let d = t.order();
    let n = t.dims()[0];
    ensure!(t.dims().iter().all(|&m| m == n), "hilbert tensors are cubic");
    let origin = vec![0usize; d];
    ensure!(t.get(&origin) == 1.0, "entry at all-ones indices must be 1");
    let far = vec![n - 1; d];
    let want = 1.0 / (1.0 + (d * (n - 1)) as f64);
    ensure!(t.get(&far) == want, "far-corner entry disagrees with the formula");
    for k in 0..d {
        let mut idx = vec![0usize; d];
        idx[k] = n - 1;
        let want = 1.0 / (n as f64);
        ensure!(
            t.get(&idx) == want,
            "axis corner entry disagrees with the formula"
        );
    }
    Ok(())
}

/// Random tensor of multilinear rank at most `ranks`: a Gaussian core
/// densified with Gaussian factors.
pub fn gen_random_lowrank(dims: &[usize], ranks: &[usize], seed: u64) -> Result<Tensor64> {
    ensure!(!dims.is_empty(), "dims must be nonempty");
    ensure!(
        dims.len() == ranks.len(),
        "got {} dims but {} ranks",
        dims.len(),
        ranks.len()
    );
    for (k, (&n, &r)) in dims.iter().zip(ranks).enumerate() {
        ensure!(r >= 1 && r <= n, "mode {k}: rank {r} must lie in 1..={n}");
    }
    let core_values: Matrix64 = draw_sketch(&SketchSpec::gaussian(
        ranks.iter().product(),
        1,
        mix_seed(seed, SALT_CORE),
    ))?;
    let core = DenseTensor::new(ranks.to_vec(), core_values.values().to_vec())?;
    let factors = dims
        .iter()
        .zip(ranks)
        .enumerate()
        .map(|(k, (&n, &r))| {
            draw_sketch(&SketchSpec::gaussian(
                n,
                r,
                mix_seed(seed, SALT_FACTOR + k as u64),
            ))
        })
        .collect::<mln_core::Result<Vec<Matrix64>>>()?;
    Ok(TuckerTensor::new(core, factors)?.densify()?)
}

/// Checks that every matricization of `t` numerically has rank at most
/// `ranks[k]`: the trailing singular values vanish relative to the leading
/// one.
pub fn validate_lowrank(t: &Tensor64, ranks: &[usize]) -> Result<()> {
    ensure!(t.order() == ranks.len(), "rank list does not match the order");
    for k in 0..t.order() {
        let s = svd(&mode_unfold(t, k)?)?.s;
        if ranks[k] < s.len() {
            ensure!(
                s[ranks[k]] <= 1e-10 * s[0],
                "mode {k}: singular value past the rank is {:.3e}",
                s[ranks[k]]
            );
        }
    }
    Ok(())
}

fn block_rotation(u: &Matrix64) -> Matrix64 {
    Matrix64::from_fn(32, 32, |i, j| {
        if i < 7 || j < 7 {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            u.get(i - 7, j - 7)
        }
    })
}

fn realized_tau(y: &Matrix64, q: &Matrix64) -> Result<f64> {
    let yt = y.transposed();
    let yq = yt.mul(q)?;
    let smin = svd(&yq)?.s.last().copied().unwrap_or(0.0);
    let resid = yt.sub(&yq.mul(&q.transposed())?)?;
    let top = spectral_norm(&resid)?;
    Ok((1.0f64 + (top / smin).powi(2)).sqrt())
}

/// Worst-case construction for subsampled-Hadamard sketching: a 32^4
/// mode-symmetric tensor whose every mode is rotated by the same
/// `diag(I_7, U)` with `U` Haar 25x25, paired with one (X, Y) sketch shared
/// across all modes. The Y candidate that maximizes the realized mode-0
/// amplification factor is kept, which deliberately steers the run toward
/// the worst-case growth the accuracy bound permits.
pub fn gen_adversarial(decay: Decay, seed: u64) -> Result<(Tensor64, SketchSpec, SketchSpec)> {
    let sigmas = decay.sigmas(32)?;
    let mut t = superdiagonal(32, 4, &sigmas)?;
    let u = haar_factor(25, mix_seed(seed, SALT_ROTATION))?;
    let q = block_rotation(&u);
    for k in 0..4 {
        t = mode_product(&t, k, &q)?;
    }

    let x_spec = SketchSpec::srht(32 * 32 * 32, 8, mix_seed(seed, SALT_SHARED_X));
    let x: Matrix64 = draw_sketch(&x_spec)?;
    // The tensor is mode-symmetric and the pair is shared, so ranking
    // candidates on mode 0 alone is representative.
    let q0 = economy_qr(&unfolding_product(&t, 0, &x)?)?.q;
    let mut best_spec = SketchSpec::srht(32, 8, mix_seed(seed, SALT_SHARED_Y));
    let mut best_tau = realized_tau(&draw_sketch::<f64>(&best_spec)?, &q0)?;
    for c in 1..UNFAVORABLE_CANDIDATES {
        let spec = SketchSpec::srht(32, 8, mix_seed(seed, SALT_SHARED_Y + c));
        let tau = realized_tau(&draw_sketch::<f64>(&spec)?, &q0)?;
        if tau > best_tau {
            best_tau = tau;
            best_spec = spec;
        }
    }
    Ok((t, x_spec, best_spec))
}

/// Checks mode symmetry: all matricizations share one set of singular values
/// (the sigmas themselves) to absolute accuracy 1e-10.
pub fn validate_adversarial(t: &Tensor64, sigmas: &[f64]) -> Result<()> {
    ensure!(t.dims() == [32, 32, 32, 32], "adversarial tensors are 32^4");
    validate_cp_superdiag(t, sigmas)
}
