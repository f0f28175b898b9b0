//! Runtime evaluation of the deterministic accuracy bound and per-mode
//! error decompositions for completed multilinear Nystrom runs.
//!
//! For a run with range sketches `X_k` and corange sketches `Y_k`, let
//! `Q_k = orth(A_(k) X_k)`, let `V_k` hold the leading `rhat_k` right
//! singular vectors of `A_(k)`, and let `eps_k` be the Frobenius tail of
//! `A_(k)` past `rhat_k`. With
//!
//! * `tau_k = sqrt(1 + ||(Y_k^T Q_k)^+||_2^2 * ||Y_k^T Q_k_perp||_2^2)`,
//! * `rho_k = sqrt(1 + ||V_k_perp^T X_k||_2^2 * ||(V_k^T X_k)^+||_2^2)`,
//!
//! and `tau`, `rho`, `eps` the maxima over modes, the approximant satisfies
//! `||A - Ahat||_F <= eps * rho * ((1 + tau)^d - 1)` whenever every
//! `Y_k^T Q_k` has full rank. [`evaluate_bound`] computes every quantity
//! from the stored sketches and flags modes where the full-rank premise is
//! numerically violated instead of reporting a vacuous bound.

use crate::error::{Error, Result};
use crate::linalg::{economy_qr, orthonormal_complement, spectral_norm, svd};
use crate::mln::MlnRun;
use crate::scalar::Real;
use crate::tensor::{mode_product, mode_unfold, unfolding_product, DenseTensor};

/// Largest mode size the bound evaluator accepts: it materializes one
/// `n_k x n_k` orthonormal complement per mode.
pub const MAX_BOUND_DIM: usize = 512;

/// Everything the deterministic accuracy bound is made of, per mode and
/// aggregated.
#[derive(Debug, Clone)]
pub struct BoundReport<F> {
    /// Per-mode projection amplification `tau_k` (each `>= 1`).
    pub tau_ks: Vec<F>,
    /// Per-mode sketch alignment amplification `rho_k` (each `>= 1`).
    pub rho_ks: Vec<F>,
    /// Per-mode Frobenius tails of the unfoldings past `rhat_k`.
    pub eps_ks: Vec<F>,
    pub tau: F,
    pub rho: F,
    pub eps: F,
    /// `eps * rho * ((1 + tau)^d - 1)`.
    pub bound_value: F,
    /// Absolute Frobenius error of the run's approximant.
    pub measured_error: F,
    /// `measured_error <= bound_value * (1 + 1e-8)`.
    pub satisfied: bool,
    /// Modes where `Y_k^T Q_k` is numerically rank deficient, voiding the
    /// bound's premise.
    pub flagged_modes: Vec<usize>,
    /// True when no mode is flagged.
    pub precondition_ok: bool,
}

/// Splits errors mode by mode: `increments[k]` is the Frobenius change from
/// applying projector `k` after projectors `0..k`, `cumulative[k]` the error
/// against the original tensor after `k + 1` projectors.
#[derive(Debug, Clone)]
pub struct ErrorDecomposition<F> {
    pub increments: Vec<F>,
    pub cumulative: Vec<F>,
    /// Error of the fully projected tensor; bounded by the sum of the
    /// increments (triangle inequality).
    pub total: F,
    /// `increments[k + 1] / increments[k]`.
    pub ratios: Vec<F>,
}

/// Applies the run's mode-`k` oblique projector to a tensor.
fn apply_projector<F: Real>(
    t: &DenseTensor<F>,
    run: &MlnRun<F>,
    k: usize,
) -> Result<DenseTensor<F>> {
    let mut out = mode_product(t, k, &run.ys[k].transposed())?;
    if let Some(z) = &run.zs[k] {
        out = mode_product(&out, k, &z.transposed())?;
    }
    mode_product(&out, k, run.tucker.factor(k))
}

/// `||A - A x_k P_k||_F`: the error of projecting a single mode.
pub fn mode_projection_error<F: Real>(
    a: &DenseTensor<F>,
    run: &MlnRun<F>,
    k: usize,
) -> Result<F> {
    check_mode(a, run, k)?;
    Ok(a.sub(&apply_projector(a, run, k)?)?.frobenius_norm())
}

/// `||Q_k_perp^T A_(k)||_F` with `Q_k = orth(A_(k) X_k)`: the error a plain
/// rangefinder would leave on mode `k`, computed without the complement as
/// `||M - Q (Q^T M)||_F`.
pub fn hmt_mode_error<F: Real>(a: &DenseTensor<F>, run: &MlnRun<F>, k: usize) -> Result<F> {
    check_mode(a, run, k)?;
    let q = economy_qr(&unfolding_product(a, k, &run.xs[k])?)?.q;
    let unf = mode_unfold(a, k)?;
    let projected = q.mul(&q.t_mul(&unf)?)?;
    Ok(unf.sub(&projected)?.frobenius_norm())
}

/// Spectral norm of the run's mode-`k` projector, materialized as the dense
/// `n_k x n_k` matrix `W_k Z_k^T Y_k^T` (or `W_k Y_k^T` on stabilized
/// modes). Always at least 1 for a nonzero oblique projector; the excess
/// over 1 measures obliqueness.
pub fn projector_norm<F: Real>(run: &MlnRun<F>, k: usize) -> Result<F> {
    if k >= run.tucker.order() {
        return Err(Error::ModeIndex {
            mode: k,
            order: run.tucker.order(),
        });
    }
    let w = run.tucker.factor(k);
    let dense = match &run.zs[k] {
        Some(z) => w.mul_t(&run.ys[k].mul(z)?)?,
        None => w.mul_t(&run.ys[k])?,
    };
    spectral_norm(&dense)
}

fn check_mode<F: Real>(a: &DenseTensor<F>, run: &MlnRun<F>, k: usize) -> Result<()> {
    if k >= a.order() {
        return Err(Error::ModeIndex {
            mode: k,
            order: a.order(),
        });
    }
    if run.tucker.outer_dims() != a.dims() {
        return Err(Error::Shape(format!(
            "run approximates dimensions {:?}, not {:?}",
            run.tucker.outer_dims(),
            a.dims()
        )));
    }
    Ok(())
}

/// Evaluates the deterministic accuracy bound for a completed run against
/// the tensor it approximated.
///
/// `rhat` optionally lowers the reference ranks used for the tails and the
/// leading right singular subspaces (`rhat_k <= r_k`); by default they equal
/// the run's ranks. Every mode size must be at most [`MAX_BOUND_DIM`].
pub fn evaluate_bound<F: Real>(
    a: &DenseTensor<F>,
    run: &MlnRun<F>,
    rhat: Option<&[usize]>,
) -> Result<BoundReport<F>> {
    check_mode(a, run, 0)?;
    let d = a.order();
    if let Some(&got) = a.dims().iter().find(|&&n| n > MAX_BOUND_DIM) {
        return Err(Error::DiagnosticsScale {
            max: MAX_BOUND_DIM,
            got,
        });
    }
    let rhat = match rhat {
        Some(r) => {
            if r.len() != d || r.iter().zip(&run.ranks).any(|(&rh, &r)| rh == 0 || rh > r) {
                return Err(Error::Rank(format!(
                    "reference ranks {r:?} must be positive and at most the run ranks {:?}",
                    run.ranks
                )));
            }
            r.to_vec()
        }
        None => run.ranks.clone(),
    };

    let mut tau_ks = Vec::with_capacity(d);
    let mut rho_ks = Vec::with_capacity(d);
    let mut eps_ks = Vec::with_capacity(d);
    let mut flagged_modes = Vec::new();
    for k in 0..d {
        let n_k = a.dims()[k];
        let q = economy_qr(&unfolding_product(a, k, &run.xs[k])?)?.q;

        let yq = run.ys[k].t_mul(&q)?;
        let yq_svd = svd(&yq)?;
        let sigma_max = yq_svd.s.first().copied().unwrap_or_else(F::zero);
        let sigma_min = yq_svd.s.last().copied().unwrap_or_else(F::zero);
        if sigma_min <= F::of(1e-10) * sigma_max {
            flagged_modes.push(k);
        }
        let pinv_yq = if sigma_min > F::zero() {
            F::one() / sigma_min
        } else {
            F::infinity()
        };
        let yq_perp = if q.cols() == n_k {
            F::zero()
        } else {
            spectral_norm(&run.ys[k].t_mul(&orthonormal_complement(&q)?)?)?
        };
        tau_ks.push((F::one() + (pinv_yq * yq_perp).powi(2)).sqrt());

        let unf = mode_unfold(a, k)?;
        let unf_svd = svd(&unf)?;
        let tail = unf_svd.s[rhat[k]..]
            .iter()
            .rev()
            .map(|&s| s * s)
            .fold(F::zero(), |acc, v| acc + v)
            .sqrt();
        eps_ks.push(tail);

        let v = unf_svd.v.columns(0, rhat[k])?;
        let vx = v.t_mul(&run.xs[k])?;
        let vx_svd = svd(&vx)?;
        let sigma_min_vx = vx_svd.s.last().copied().unwrap_or_else(F::zero);
        let pinv_vx = if sigma_min_vx > F::zero() {
            F::one() / sigma_min_vx
        } else {
            F::infinity()
        };
        let perp = run.xs[k].sub(&v.mul(&vx)?)?;
        let perp_norm = spectral_norm(&perp)?;
        rho_ks.push((F::one() + (perp_norm * pinv_vx).powi(2)).sqrt());
    }

    let max = |v: &[F]| v.iter().fold(F::zero(), |acc, &x| acc.max(x));
    let tau = max(&tau_ks);
    let rho = max(&rho_ks);
    let eps = max(&eps_ks);
    let bound_value = eps * rho * ((F::one() + tau).powi(d as i32) - F::one());
    let measured_error = a.sub(&run.tucker.densify()?)?.frobenius_norm();
    let satisfied = measured_error <= bound_value * (F::one() + F::of(1e-8));
    Ok(BoundReport {
        tau_ks,
        rho_ks,
        eps_ks,
        tau,
        rho,
        eps,
        bound_value,
        measured_error,
        satisfied,
        precondition_ok: flagged_modes.is_empty(),
        flagged_modes,
    })
}

/// Applies the run's projectors mode by mode and records how much each one
/// moves the tensor.
pub fn error_decomposition<F: Real>(
    a: &DenseTensor<F>,
    run: &MlnRun<F>,
) -> Result<ErrorDecomposition<F>> {
    check_mode(a, run, 0)?;
    let d = a.order();
    let mut increments = Vec::with_capacity(d);
    let mut cumulative = Vec::with_capacity(d);
    let mut working = a.clone();
    for k in 0..d {
        let next = apply_projector(&working, run, k)?;
        increments.push(working.sub(&next)?.frobenius_norm());
        working = next;
        cumulative.push(a.sub(&working)?.frobenius_norm());
    }
    let total = *cumulative.last().expect("order >= 1");
    let ratios = increments
        .windows(2)
        .map(|w| w[1] / w[0])
        .collect();
    Ok(ErrorDecomposition {
        increments,
        cumulative,
        total,
        ratios,
    })
}
