//! Multilinear Nystrom approximation of dense tensors in Tucker format.
//!
//! For each mode `k` the method draws a tall range sketch
//! `X_k` (`prod_{i != k} n_i x r_k`) and a small corange sketch
//! `Y_k` (`n_k x (r_k + ell_k)`), forms `F_k = A_(k) X_k` and the small
//! matrix `S_k = Y_k^T F_k`, and assembles
//!
//! * factors `W_k = F_k R_k^{-1}` from the economy QR `S_k = Z_k R_k`,
//! * core `(A x_k Y_k^T) x_k Z_k^T` contracted over every mode,
//!
//! so the approximant is `A` hit by the oblique projector
//! `P_k = F_k (Y_k^T F_k)^+ Y_k^T` on every mode. The stabilized variant
//! replaces `R_k^{-1}` and the `Z_k` contraction by a truncated
//! pseudoinverse of `S_k`, trading a slightly larger core
//! (`r_k + ell_k` per mode) for immunity to ill-conditioned `S_k`.
//!
//! [`tucker_recompress`] runs the same method on a tensor already in Tucker
//! format without ever densifying it: all sketch contractions factor through
//! the small core.

use crate::error::{Error, Result};
use crate::linalg::{economy_qr, mul_eps_pseudoinverse, solve_upper_triangular};
use crate::matrix::Matrix;
use crate::nystrom::EpsRule;
use crate::scalar::Real;
use crate::sketch::{
    apply_structured_sketch, draw_sketch, sketch_seed, SketchKind, SketchRole, SketchSpec,
};
use crate::tensor::{mode_product, mode_unfold, unfolding_product, DenseTensor};

/// Tensor in Tucker format: a small core and one factor matrix per mode.
#[derive(Debug, Clone)]
pub struct TuckerTensor<F> {
    core: DenseTensor<F>,
    factors: Vec<Matrix<F>>,
}

impl<F: Real> TuckerTensor<F> {
    /// Wraps a core and factors; `factors[k]` must have as many columns as
    /// core dimension `k`.
    pub fn new(core: DenseTensor<F>, factors: Vec<Matrix<F>>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::Dimension(format!(
                "{} factors cannot dress an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.cols() != core.dims()[k] {
                return Err(Error::Shape(format!(
                    "factor {k} has {} columns but core dimension {k} is {}",
                    f.cols(),
                    core.dims()[k]
                )));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn core(&self) -> &DenseTensor<F> {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix<F>] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &Matrix<F> {
        &self.factors[k]
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    /// Core dimensions, i.e. the per-mode ranks of the format.
    pub fn ranks(&self) -> &[usize] {
        self.core.dims()
    }

    /// Row counts of the factors, i.e. the dimensions after densifying.
    pub fn outer_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    /// Evaluates `core x_0 factor_0 ... x_{d-1} factor_{d-1}`, applying the
    /// factors in ascending order of their row count to keep intermediates
    /// small.
    pub fn densify(&self) -> Result<DenseTensor<F>> {
        let mut order: Vec<usize> = (0..self.order()).collect();
        order.sort_by_key(|&k| (self.factors[k].rows(), k));
        let mut out = self.core.clone();
        for k in order {
            out = mode_product(&out, k, &self.factors[k])?;
        }
        Ok(out)
    }

    /// Frobenius norm of the densified tensor without densifying: taken
    /// directly from the core when every factor has orthonormal columns,
    /// otherwise via the Gram matrices of the factors contracted into the
    /// core.
    pub fn frobenius_norm(&self) -> Result<F> {
        let orthonormal = self.factors.iter().all(|f| {
            let mut gram = f.t_mul(f).expect("square gram");
            for j in 0..gram.cols() {
                let v = gram.get(j, j) - F::one();
                gram.set(j, j, v);
            }
            gram.frobenius_norm() <= F::of(1e-12) * F::of_usize(f.cols()).sqrt()
        });
        if orthonormal {
            return Ok(self.core.frobenius_norm());
        }
        let mut contracted = self.core.clone();
        for (k, f) in self.factors.iter().enumerate() {
            contracted = mode_product(&contracted, k, &f.t_mul(f)?)?;
        }
        let inner = self
            .core
            .values()
            .iter()
            .zip(contracted.values())
            .map(|(&a, &b)| a * b)
            .fold(F::zero(), |acc, v| acc + v);
        Ok(inner.max(F::zero()).sqrt())
    }
}

/// Oversampling choice: explicit per-mode counts or the `ceil(r_k / 2)` rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Oversample {
    Fixed(Vec<usize>),
    HalfRank,
}

impl Default for Oversample {
    fn default() -> Self {
        Oversample::HalfRank
    }
}

impl Oversample {
    /// Per-mode oversampling counts for the given ranks. The half-rank rule
    /// caps each count at the room the mode leaves (`n_k - r_k`), so a rank
    /// close to the mode size degrades gracefully instead of failing;
    /// explicit counts are returned as requested and validated downstream.
    pub fn resolve(&self, ranks: &[usize], dims: &[usize]) -> Result<Vec<usize>> {
        match self {
            Oversample::HalfRank => Ok(ranks
                .iter()
                .zip(dims)
                .map(|(&r, &n)| r.div_ceil(2).min(n.saturating_sub(r)))
                .collect()),
            Oversample::Fixed(ells) => {
                if ells.len() != ranks.len() {
                    return Err(Error::Rank(format!(
                        "{} oversampling entries for {} ranks",
                        ells.len(),
                        ranks.len()
                    )));
                }
                Ok(ells.clone())
            }
        }
    }
}

/// Parameters of a multilinear Nystrom run.
#[derive(Debug, Clone)]
pub struct MlnParams {
    pub ranks: Vec<usize>,
    pub oversample: Oversample,
    pub x_kind: SketchKind,
    pub y_kind: SketchKind,
    pub seed: u64,
    pub stabilized: bool,
    pub eps: EpsRule,
}

impl MlnParams {
    /// Defaults: `ceil(r/2)` oversampling, Gaussian sketches on both sides,
    /// plain (non-stabilized) assembly, stabilization threshold
    /// `10 u ||A||_F`.
    pub fn new(ranks: Vec<usize>, seed: u64) -> Self {
        Self {
            ranks,
            oversample: Oversample::HalfRank,
            x_kind: SketchKind::Gaussian,
            y_kind: SketchKind::Gaussian,
            seed,
            stabilized: false,
            eps: EpsRule::smln_10(),
        }
    }

    pub fn with_oversample(mut self, oversample: Oversample) -> Self {
        self.oversample = oversample;
        self
    }

    pub fn with_fixed_oversample(self, ells: Vec<usize>) -> Self {
        self.with_oversample(Oversample::Fixed(ells))
    }

    pub fn with_stabilized(mut self, stabilized: bool) -> Self {
        self.stabilized = stabilized;
        self
    }

    pub fn with_eps(mut self, eps: EpsRule) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_x_kind(mut self, kind: SketchKind) -> Self {
        self.x_kind = kind;
        self
    }

    pub fn with_y_kind(mut self, kind: SketchKind) -> Self {
        self.y_kind = kind;
        self
    }
}

/// A completed multilinear Nystrom run: the Tucker approximant plus the
/// sketches and small factors the diagnostics need to evaluate bounds.
#[derive(Debug, Clone)]
pub struct MlnRun<F> {
    pub ranks: Vec<usize>,
    pub oversample: Vec<usize>,
    /// Resolved pseudoinverse threshold (used on stabilized or fallback
    /// modes).
    pub eps: F,
    /// Whether the stabilized assembly was requested for all modes.
    pub stabilized: bool,
    /// Range sketches, one per mode (`prod_{i != k} n_i x r_k`).
    pub xs: Vec<Matrix<F>>,
    /// Corange sketches, one per mode (`n_k x (r_k + ell_k)`).
    pub ys: Vec<Matrix<F>>,
    /// Orthonormal factors of the small QRs for plain modes; `None` where
    /// the stabilized formula was used.
    pub zs: Vec<Option<Matrix<F>>>,
    /// Modes where the plain path hit a singular triangular factor and fell
    /// back to the stabilized formula.
    pub fallback_modes: Vec<usize>,
    pub tucker: TuckerTensor<F>,
}

impl<F: Real> MlnRun<F> {
    /// Relative Frobenius error of the approximant against `a`.
    pub fn relative_error(&self, a: &DenseTensor<F>) -> Result<F> {
        let dense = self.tucker.densify()?;
        Ok(a.sub(&dense)?.frobenius_norm() / a.frobenius_norm())
    }
}

fn validate_ranks(dims: &[usize], ranks: &[usize], ells: &[usize]) -> Result<()> {
    if ranks.len() != dims.len() {
        return Err(Error::Rank(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            dims.len()
        )));
    }
    let total: usize = dims.iter().product();
    for (k, (&r, (&ell, &n))) in ranks.iter().zip(ells.iter().zip(dims)).enumerate() {
        if r == 0 {
            return Err(Error::Rank(format!("rank for mode {k} must be at least 1")));
        }
        if r + ell > n {
            return Err(Error::Rank(format!(
                "rank {r} + oversampling {ell} exceeds dimension {n} of mode {k}"
            )));
        }
        if r > total / n {
            return Err(Error::Rank(format!(
                "rank {r} exceeds the {} columns of the mode-{k} unfolding",
                total / n
            )));
        }
    }
    Ok(())
}

/// Sketch spec for the range side of mode `k`.
fn x_spec(dims: &[usize], k: usize, kind: SketchKind, cols: usize, seed: u64) -> SketchSpec {
    let rows: usize = dims.iter().product::<usize>() / dims[k];
    SketchSpec {
        kind,
        rows,
        cols,
        seed: sketch_seed(seed, k, SketchRole::X),
        factor_dims: kind.is_structured().then(|| {
            dims.iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &n)| n)
                .collect()
        }),
    }
}

/// Sketch spec for the corange side of mode `k`.
fn y_spec(dims: &[usize], k: usize, kind: SketchKind, cols: usize, seed: u64) -> SketchSpec {
    SketchSpec {
        kind,
        rows: dims[k],
        cols,
        seed: sketch_seed(seed, k, SketchRole::Y),
        factor_dims: kind.is_structured().then(|| vec![dims[k]]),
    }
}

/// Multilinear Nystrom approximation of a dense tensor.
pub fn mln_approximate<F: Real>(a: &DenseTensor<F>, p: &MlnParams) -> Result<MlnRun<F>> {
    let ells = p.oversample.resolve(&p.ranks, a.dims())?;
    validate_ranks(a.dims(), &p.ranks, &ells)?;
    let mut xs = Vec::with_capacity(a.order());
    let mut ys = Vec::with_capacity(a.order());
    for k in 0..a.order() {
        xs.push(draw_sketch(&x_spec(
            a.dims(),
            k,
            p.x_kind,
            p.ranks[k],
            p.seed,
        ))?);
        ys.push(draw_sketch(&y_spec(
            a.dims(),
            k,
            p.y_kind,
            p.ranks[k] + ells[k],
            p.seed,
        ))?);
    }
    mln_with_sketches(a, xs, ys, p.stabilized, p.eps)
}

/// [`mln_approximate`] with caller-provided sketches. `xs[k]` must have
/// `prod_{i != k} n_i` rows and `ys[k]` must have `n_k` rows and at least as
/// many columns as `xs[k]`.
pub fn mln_with_sketches<F: Real>(
    a: &DenseTensor<F>,
    xs: Vec<Matrix<F>>,
    ys: Vec<Matrix<F>>,
    stabilized: bool,
    eps: EpsRule,
) -> Result<MlnRun<F>> {
    let d = a.order();
    if xs.len() != d || ys.len() != d {
        return Err(Error::Rank(format!(
            "{} range and {} corange sketches for an order-{d} tensor",
            xs.len(),
            ys.len()
        )));
    }
    let total: usize = a.dims().iter().product();
    for k in 0..d {
        let n = a.dims()[k];
        if xs[k].rows() != total / n || ys[k].rows() != n || ys[k].cols() < xs[k].cols() {
            return Err(Error::Shape(format!(
                "mode {k} sketches {}x{} and {}x{} do not fit dimensions {:?}",
                xs[k].rows(),
                xs[k].cols(),
                ys[k].rows(),
                ys[k].cols(),
                a.dims()
            )));
        }
    }
    let ranks: Vec<usize> = xs.iter().map(|x| x.cols()).collect();
    let oversample: Vec<usize> = ys
        .iter()
        .zip(&ranks)
        .map(|(y, &r)| y.cols() - r)
        .collect();
    let eps_value = eps.resolve(a.frobenius_norm());

    let mut factors = Vec::with_capacity(d);
    let mut zs: Vec<Option<Matrix<F>>> = Vec::with_capacity(d);
    let mut fallback_modes = Vec::new();
    for k in 0..d {
        let f_k = unfolding_product(a, k, &xs[k])?;
        let s_k = ys[k].t_mul(&f_k)?;
        if stabilized {
            factors.push(mul_eps_pseudoinverse(&f_k, &s_k, eps_value)?);
            zs.push(None);
            continue;
        }
        let qr = economy_qr(&s_k)?;
        match solve_upper_triangular(&qr.r, &f_k) {
            Ok(w) => {
                factors.push(w);
                zs.push(Some(qr.q));
            }
            Err(Error::SingularTriangular { .. }) => {
                factors.push(mul_eps_pseudoinverse(&f_k, &s_k, eps_value)?);
                zs.push(None);
                fallback_modes.push(k);
            }
            Err(e) => return Err(e),
        }
    }

    // Contract the corange sketches in ascending dimension order (cheapest
    // reduction first), then project the plain modes onto the QR bases.
    let mut mode_order: Vec<usize> = (0..d).collect();
    mode_order.sort_by_key(|&k| (a.dims()[k], k));
    let mut core = a.clone();
    for &k in &mode_order {
        core = mode_product(&core, k, &ys[k].transposed())?;
    }
    for (k, z) in zs.iter().enumerate() {
        if let Some(z) = z {
            core = mode_product(&core, k, &z.transposed())?;
        }
    }

    Ok(MlnRun {
        ranks,
        oversample,
        eps: eps_value,
        stabilized,
        xs,
        ys,
        zs,
        fallback_modes,
        tucker: TuckerTensor::new(core, factors)?,
    })
}

/// Single-sketch run: the Tucker approximant plus the per-mode sketches.
#[derive(Debug, Clone)]
pub struct SingleSketchRun<F> {
    /// One small sketch per mode (`n_k x r_k`).
    pub xs: Vec<Matrix<F>>,
    pub tucker: TuckerTensor<F>,
}

impl<F: Real> SingleSketchRun<F> {
    /// Relative Frobenius error of the approximant against `a`.
    pub fn relative_error(&self, a: &DenseTensor<F>) -> Result<F> {
        let dense = self.tucker.densify()?;
        Ok(a.sub(&dense)?.frobenius_norm() / a.frobenius_norm())
    }
}

/// Single-sketch multilinear Nystrom: draws only `X_k` (`n_k x r_k`) per
/// mode, no oversampled second sketch. The core is `A` contracted by every
/// `X_k^T`; factor `k` is `(A x_{i != k} X_i^T)_(k)` times the
/// pseudoinverse of the fully contracted core's mode-`k` unfolding. At
/// `d = 2` this is the original two-sided Nystrom approximation
/// `A X_2 (X_1^T A X_2)^+ X_1^T A`.
pub fn mln_single_sketch<F: Real>(
    a: &DenseTensor<F>,
    ranks: &[usize],
    seed: u64,
) -> Result<SingleSketchRun<F>> {
    let d = a.order();
    let zero_ells = vec![0usize; d];
    validate_ranks(a.dims(), ranks, &zero_ells)?;
    let xs: Vec<Matrix<F>> = (0..d)
        .map(|k| {
            draw_sketch(&SketchSpec::gaussian(
                a.dims()[k],
                ranks[k],
                sketch_seed(seed, k, SketchRole::X),
            ))
        })
        .collect::<Result<_>>()?;

    let mut full = a.clone();
    for (k, x) in xs.iter().enumerate() {
        full = mode_product(&full, k, &x.transposed())?;
    }
    let mut factors = Vec::with_capacity(d);
    for k in 0..d {
        let mut partial = a.clone();
        for (i, x) in xs.iter().enumerate() {
            if i != k {
                partial = mode_product(&partial, i, &x.transposed())?;
            }
        }
        let lhs = mode_unfold(&partial, k)?;
        factors.push(mul_eps_pseudoinverse(&lhs, &mode_unfold(&full, k)?, F::zero())?);
    }
    Ok(SingleSketchRun {
        xs,
        tucker: TuckerTensor::new(full, factors)?,
    })
}

/// A completed Tucker-to-Tucker recompression.
#[derive(Debug, Clone)]
pub struct RecompressRun<F> {
    /// Resolved pseudoinverse threshold.
    pub eps: F,
    /// Modes where the plain path fell back to the stabilized formula.
    pub fallback_modes: Vec<usize>,
    pub tucker: TuckerTensor<F>,
}

/// Recompresses a Tucker tensor to smaller ranks by the multilinear Nystrom
/// method without densifying it.
///
/// Mathematically this equals [`mln_approximate`] on the densified input
/// with a structured range sketch (subsampled Kronecker over the factor
/// dimensions by default; a structured `x_kind` in `p` is honored, a dense
/// one is replaced since it could not be applied in factored form). Every
/// contraction against the implicit dense tensor is routed through the core:
/// with input `C x_k U_k`, the range sketch enters as `T_k = (U kron)^T X_k`
/// computed factor by factor, then `F_k = U_k (C_(k) T_k)` and
/// `S_k = (Y_k^T U_k) (C_(k) T_k)`.
pub fn tucker_recompress<F: Real>(t: &TuckerTensor<F>, p: &MlnParams) -> Result<RecompressRun<F>> {
    let d = t.order();
    let outer = t.outer_dims();
    let ells = p.oversample.resolve(&p.ranks, &outer)?;
    validate_ranks(&outer, &p.ranks, &ells)?;
    for (k, (&r, &c)) in p.ranks.iter().zip(t.ranks()).enumerate() {
        if r > c {
            return Err(Error::Rank(format!(
                "target rank {r} for mode {k} exceeds the input Tucker rank {c}"
            )));
        }
    }
    let x_kind = if p.x_kind.is_structured() {
        p.x_kind
    } else {
        SketchKind::KronSubsampled
    };
    let eps_value = p.eps.resolve(t.frobenius_norm()?);

    let transposed: Vec<Matrix<F>> = t.factors().iter().map(|u| u.transposed()).collect();
    let mut factors = Vec::with_capacity(d);
    let mut vs = Vec::with_capacity(d);
    let mut zs: Vec<Option<Matrix<F>>> = Vec::with_capacity(d);
    let mut fallback_modes = Vec::new();
    for k in 0..d {
        let spec = x_spec(&outer, k, x_kind, p.ranks[k], p.seed);
        // (U kron)^T X_k, assembled factor by factor.
        let t_k = apply_structured_sketch(&transposed, &spec, k)?;
        let core_t = unfolding_product(t.core(), k, &t_k)?;
        let f_k = t.factor(k).mul(&core_t)?;
        let y_k = draw_sketch(&y_spec(&outer, k, p.y_kind, p.ranks[k] + ells[k], p.seed))?;
        let v_k = y_k.t_mul(t.factor(k))?;
        let s_k = v_k.mul(&core_t)?;
        if p.stabilized {
            factors.push(mul_eps_pseudoinverse(&f_k, &s_k, eps_value)?);
            zs.push(None);
        } else {
            let qr = economy_qr(&s_k)?;
            match solve_upper_triangular(&qr.r, &f_k) {
                Ok(w) => {
                    factors.push(w);
                    zs.push(Some(qr.q));
                }
                Err(Error::SingularTriangular { .. }) => {
                    factors.push(mul_eps_pseudoinverse(&f_k, &s_k, eps_value)?);
                    zs.push(None);
                    fallback_modes.push(k);
                }
                Err(e) => return Err(e),
            }
        }
        vs.push(v_k);
    }

    let mut mode_order: Vec<usize> = (0..d).collect();
    mode_order.sort_by_key(|&k| (outer[k], k));
    let mut core = t.core().clone();
    for &k in &mode_order {
        core = mode_product(&core, k, &vs[k])?;
    }
    for (k, z) in zs.iter().enumerate() {
        if let Some(z) = z {
            core = mode_product(&core, k, &z.transposed())?;
        }
    }
    Ok(RecompressRun {
        eps: eps_value,
        fallback_modes,
        tucker: TuckerTensor::new(core, factors)?,
    })
}
