//! Matrix-case randomized low-rank approximation: the HMT rangefinder and
//! the generalized Nystrom method, plain and stabilized.
//!
//! These are the two-sided building blocks of the multilinear method in
//! [`crate::mln`], and double as oracles for its `d = 2` case.

use crate::error::{Error, Result};
use crate::linalg::{economy_qr, mul_eps_pseudoinverse, solve_upper_triangular};
use crate::matrix::{gemm_into, Matrix};
use crate::scalar::Real;
use crate::sketch::{draw_sketch, sketch_seed, SketchRole, SketchSpec};

/// Rank-`k` matrix held in factored form `left * right`.
#[derive(Debug, Clone)]
pub struct LowRankMatrix<F> {
    left: Matrix<F>,
    right: Matrix<F>,
}

impl<F: Real> LowRankMatrix<F> {
    /// Wraps factors `left` (`m x k`) and `right` (`k x n`), requiring
    /// `k <= min(m, n)` so the factored form is never larger than dense.
    pub fn new(left: Matrix<F>, right: Matrix<F>) -> Result<Self> {
        if left.cols() != right.rows() {
            return Err(Error::Shape(format!(
                "factor shapes {}x{} and {}x{} do not chain",
                left.rows(),
                left.cols(),
                right.rows(),
                right.cols()
            )));
        }
        let k = left.cols();
        if k > left.rows().min(right.cols()) {
            return Err(Error::Rank(format!(
                "factored rank {k} exceeds min({}, {})",
                left.rows(),
                right.cols()
            )));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &Matrix<F> {
        &self.left
    }

    pub fn right(&self) -> &Matrix<F> {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    pub fn rows(&self) -> usize {
        self.left.rows()
    }

    pub fn cols(&self) -> usize {
        self.right.cols()
    }

    /// Materializes `left * right`.
    pub fn densify(&self) -> Result<Matrix<F>> {
        self.left.mul(&self.right)
    }

    /// Frobenius error `||a - left * right||_F` without keeping the dense
    /// approximant around.
    pub fn error_vs(&self, a: &Matrix<F>) -> Result<F> {
        let mut residual = a.clone();
        gemm_into(
            -F::one(),
            &self.left,
            false,
            &self.right,
            false,
            F::one(),
            &mut residual,
        )?;
        Ok(residual.frobenius_norm())
    }
}

/// Rule that turns the Frobenius norm of the input into the pseudoinverse
/// truncation threshold of the stabilized method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsRule {
    /// `multiple * u * ||A||_F` where `u` is the unit roundoff.
    UnitRoundoffMultiple(f64),
    /// A fixed absolute threshold.
    Absolute(f64),
}

impl EpsRule {
    /// The tight preset `u * ||A||_F` (SMLN-1).
    pub fn smln_1() -> Self {
        EpsRule::UnitRoundoffMultiple(1.0)
    }

    /// The default preset `10 * u * ||A||_F` (SMLN-10).
    pub fn smln_10() -> Self {
        EpsRule::UnitRoundoffMultiple(10.0)
    }

    /// Resolves the rule against the Frobenius norm of the input.
    pub fn resolve<F: Real>(&self, frobenius_norm: F) -> F {
        match *self {
            EpsRule::UnitRoundoffMultiple(m) => F::of(m) * F::unit_roundoff() * frobenius_norm,
            EpsRule::Absolute(eps) => F::of(eps),
        }
    }
}

impl Default for EpsRule {
    fn default() -> Self {
        EpsRule::smln_10()
    }
}

/// Halko-Martinsson-Tropp rangefinder plus the projection it induces:
/// `left = Q = orth(A X)` with `r + ell` orthonormal columns and
/// `right = Q^T A`.
pub fn hmt_rangefinder<F: Real>(
    a: &Matrix<F>,
    r: usize,
    ell: usize,
    seed: u64,
) -> Result<LowRankMatrix<F>> {
    if ell < 2 {
        return Err(Error::Rank(format!(
            "rangefinder oversampling must be at least 2, got {ell}"
        )));
    }
    if r == 0 || r + ell > a.rows().min(a.cols()) {
        return Err(Error::Rank(format!(
            "rank {r} + oversampling {ell} infeasible for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let x: Matrix<F> = draw_sketch(&SketchSpec::gaussian(
        a.cols(),
        r + ell,
        sketch_seed(seed, 0, SketchRole::X),
    ))?;
    let q = economy_qr(&a.mul(&x)?)?.q;
    let right = q.t_mul(a)?;
    LowRankMatrix::new(q, right)
}

/// One generalized Nystrom run with everything a later diagnostic needs.
#[derive(Debug, Clone)]
pub struct GnRun<F> {
    /// Range-side sketch (`n x r`).
    pub x: Matrix<F>,
    /// Corange-side sketch (`m x (r + ell)`).
    pub y: Matrix<F>,
    pub approximant: LowRankMatrix<F>,
    /// Pseudoinverse threshold the stabilized path used (or would use).
    pub eps: F,
    /// Whether the stabilized formula produced the result.
    pub stabilized: bool,
    /// True when the plain path hit a singular triangular factor and fell
    /// back to the stabilized one.
    pub used_fallback: bool,
}

/// Generalized Nystrom approximation `A X (Y^T A X)^+ Y^T A` with Gaussian
/// sketches `X` (`n x r`) and `Y` (`m x (r + ell)`).
///
/// The plain path (`stabilized = false`) runs the QR-based formula
/// `left = (A X) R^{-1}`, `right = Z^T (Y^T A)`; if the triangular solve
/// reports a singular factor it falls back to the stabilized path and marks
/// the run. The stabilized path truncates the pseudoinverse of `Y^T A X` at
/// the threshold resolved from `eps`.
///
/// The classical analysis assumes `ell >= 1`; `ell = 0` is accepted so the
/// instability it causes can be measured.
pub fn gn_approximate<F: Real>(
    a: &Matrix<F>,
    r: usize,
    ell: usize,
    seed: u64,
    stabilized: bool,
    eps: EpsRule,
) -> Result<GnRun<F>> {
    if r == 0 || r + ell > a.rows().min(a.cols()) {
        return Err(Error::Rank(format!(
            "rank {r} + oversampling {ell} infeasible for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let x = draw_sketch(&SketchSpec::gaussian(
        a.cols(),
        r,
        sketch_seed(seed, 0, SketchRole::X),
    ))?;
    let y = draw_sketch(&SketchSpec::gaussian(
        a.rows(),
        r + ell,
        sketch_seed(seed, 0, SketchRole::Y),
    ))?;
    gn_with_sketches(a, x, y, stabilized, eps)
}

/// [`gn_approximate`] with caller-provided sketches (`y.cols() >= x.cols()`).
pub fn gn_with_sketches<F: Real>(
    a: &Matrix<F>,
    x: Matrix<F>,
    y: Matrix<F>,
    stabilized: bool,
    eps: EpsRule,
) -> Result<GnRun<F>> {
    if x.rows() != a.cols() || y.rows() != a.rows() || y.cols() < x.cols() {
        return Err(Error::Shape(format!(
            "sketch shapes {}x{} and {}x{} do not fit a {}x{} input",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols(),
            a.rows(),
            a.cols()
        )));
    }
    let eps_value = eps.resolve(a.frobenius_norm());
    let ax = a.mul(&x)?;
    let ya = y.t_mul(a)?;
    let s = y.t_mul(&ax)?;

    let stabilized_factors = |note: &mut bool| -> Result<(Matrix<F>, Matrix<F>)> {
        *note = true;
        Ok((mul_eps_pseudoinverse(&ax, &s, eps_value)?, ya.clone()))
    };

    let mut ran_stabilized = false;
    let (left, right, used_fallback) = if stabilized {
        let (l, r) = stabilized_factors(&mut ran_stabilized)?;
        (l, r, false)
    } else {
        let qr = economy_qr(&s)?;
        match solve_upper_triangular(&qr.r, &ax) {
            Ok(w) => (w, qr.q.t_mul(&ya)?, false),
            Err(Error::SingularTriangular { .. }) => {
                let (l, r) = stabilized_factors(&mut ran_stabilized)?;
                (l, r, true)
            }
            Err(e) => return Err(e),
        }
    };
    Ok(GnRun {
        x,
        y,
        approximant: LowRankMatrix::new(left, right)?,
        eps: eps_value,
        stabilized: ran_stabilized,
        used_fallback,
    })
}
