//! Dense decompositions: Householder QR, one-sided Jacobi SVD, truncated
//! pseudoinverses, right triangular solves and spectral norms.
//!
//! Everything here is deterministic: no pivoting, no threading, and a fixed
//! seed for the power-iteration start vector, so repeated runs of the same
//! build produce bit-identical factors.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::sketch::SeededRng;

/// Result of an economy QR factorization: `q` has orthonormal columns,
/// `r` is square upper triangular with exact zeros below the diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors<F> {
    pub q: Matrix<F>,
    pub r: Matrix<F>,
}

/// Economy SVD `input = u * diag(s) * v^T` with `s` sorted descending and
/// the first numerically nonzero entry of each column of `u` nonnegative.
#[derive(Debug, Clone)]
pub struct SvdFactors<F> {
    pub u: Matrix<F>,
    pub s: Vec<F>,
    pub v: Matrix<F>,
}

/// Householder reflectors of a tall matrix, kept in factored form.
struct Reflectors<F> {
    a: Vec<F>,
    rows: usize,
    cols: usize,
    /// Reflector `j` acts on rows `j..rows`; empty when the column was zero.
    vs: Vec<Vec<F>>,
    taus: Vec<F>,
}

fn householder_factor<F: Real>(m: &Matrix<F>) -> Reflectors<F> {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.values().to_vec();
    let mut vs: Vec<Vec<F>> = Vec::with_capacity(cols);
    let mut taus = Vec::with_capacity(cols);
    for j in 0..cols {
        let len = rows - j;
        let x0 = a[j * rows + j];
        let below = a[j * rows + j + 1..(j + 1) * rows]
            .iter()
            .map(|&x| x * x)
            .fold(F::zero(), |acc, x| acc + x);
        if below == F::zero() && x0 >= F::zero() {
            // Column already triangular with nonnegative pivot: no reflector,
            // which keeps exactly triangular inputs bitwise intact.
            vs.push(Vec::new());
            taus.push(F::zero());
            continue;
        }
        let norm = (x0 * x0 + below).sqrt();
        let alpha = if x0 >= F::zero() { -norm } else { norm };
        let mut v: Vec<F> = a[j * rows + j..(j + 1) * rows].to_vec();
        v[0] -= alpha;
        let vtv = v.iter().map(|&x| x * x).fold(F::zero(), |acc, x| acc + x);
        let tau = F::of(2.0) / vtv;
        for c in (j + 1)..cols {
            let base = c * rows + j;
            let mut w = F::zero();
            for i in 0..len {
                w += v[i] * a[base + i];
            }
            w *= tau;
            for i in 0..len {
                a[base + i] -= w * v[i];
            }
        }
        a[j * rows + j] = alpha;
        vs.push(v);
        taus.push(tau);
    }
    Reflectors {
        a,
        rows,
        cols,
        vs,
        taus,
    }
}

impl<F: Real> Reflectors<F> {
    /// Upper triangular `cols x cols` factor with exact zeros below the
    /// diagonal.
    fn r(&self) -> Matrix<F> {
        Matrix::from_fn(self.cols, self.cols, |i, j| {
            if i <= j {
                self.a[j * self.rows + i]
            } else {
                F::zero()
            }
        })
    }

    /// Applies the reflectors in reverse to the first `q_cols` columns of the
    /// identity, yielding an orthonormal `rows x q_cols` matrix.
    fn build_q(&self, q_cols: usize) -> Matrix<F> {
        let rows = self.rows;
        let mut q = Matrix::from_fn(rows, q_cols, |i, j| {
            if i == j {
                F::one()
            } else {
                F::zero()
            }
        });
        for j in (0..self.cols).rev() {
            let v = &self.vs[j];
            if v.is_empty() {
                continue;
            }
            let tau = self.taus[j];
            let len = rows - j;
            for c in 0..q_cols {
                let col = q.col_mut(c);
                let mut w = F::zero();
                for i in 0..len {
                    w += v[i] * col[j + i];
                }
                w *= tau;
                for i in 0..len {
                    col[j + i] -= w * v[i];
                }
            }
        }
        q
    }
}

/// Economy QR of a tall matrix (`rows >= cols`), without pivoting.
pub fn economy_qr<F: Real>(m: &Matrix<F>) -> Result<QrFactors<F>> {
    if m.rows() < m.cols() {
        return Err(Error::Shape(format!(
            "economy QR needs rows >= cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let h = householder_factor(m);
    Ok(QrFactors {
        q: h.build_q(m.cols()),
        r: h.r(),
    })
}

/// One-sided Jacobi on a square matrix: rotates columns until they are
/// mutually orthogonal, then reads off `w = u * diag(s)` and accumulates the
/// rotations into `v`. Returns columns sorted by descending norm; exactly
/// zero columns of `u` are filled by a deterministic basis completion.
fn jacobi_svd<F: Real>(b: &Matrix<F>) -> (Matrix<F>, Vec<F>, Matrix<F>) {
    let n = b.rows();
    debug_assert_eq!(n, b.cols());
    let mut w = b.clone();
    let mut v = Matrix::identity(n);
    let tol = F::epsilon();
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (app, aqq, apq) = {
                    let wp = w.col(p);
                    let wq = w.col(q);
                    let mut app = F::zero();
                    let mut aqq = F::zero();
                    let mut apq = F::zero();
                    for i in 0..n {
                        app += wp[i] * wp[i];
                        aqq += wq[i] * wq[i];
                        apq += wp[i] * wq[i];
                    }
                    (app, aqq, apq)
                };
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (F::of(2.0) * apq);
                let t = if zeta >= F::zero() {
                    F::one() / (zeta + (F::one() + zeta * zeta).sqrt())
                } else {
                    -F::one() / (-zeta + (F::one() + zeta * zeta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                rotate_cols(&mut w, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut s: Vec<F> = (0..n)
        .map(|j| {
            w.col(j)
                .iter()
                .map(|&x| x * x)
                .fold(F::zero(), |acc, x| acc + x)
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("singular values are finite"));
    let w_sorted = Matrix::from_fn(n, n, |i, j| w.get(i, order[j]));
    let v_sorted = Matrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    s = order.iter().map(|&j| s[j]).collect();

    let mut u = Matrix::zeros(n, n);
    let mut filled = Vec::with_capacity(n);
    for j in 0..n {
        if s[j] > F::zero() {
            let inv = F::one() / s[j];
            for i in 0..n {
                u.set(i, j, w_sorted.get(i, j) * inv);
            }
            filled.push(j);
        }
    }
    for j in 0..n {
        if s[j] == F::zero() {
            let col = complete_direction(&u, &filled, n);
            for i in 0..n {
                u.set(i, j, col[i]);
            }
            filled.push(j);
        }
    }
    (u, s, v_sorted)
}

/// Plane rotation of columns `p`, `q`: `(wp, wq) <- (c*wp - s*wq, s*wp + c*wq)`.
fn rotate_cols<F: Real>(m: &mut Matrix<F>, p: usize, q: usize, c: F, s: F) {
    let rows = m.rows();
    for i in 0..rows {
        let xp = m.get(i, p);
        let xq = m.get(i, q);
        m.set(i, p, c * xp - s * xq);
        m.set(i, q, s * xp + c * xq);
    }
}

/// Picks the coordinate direction farthest from the span of the columns of
/// `u` listed in `filled`, orthogonalizes it twice and normalizes. Used to
/// complete an orthonormal basis alongside exactly zero singular values.
fn complete_direction<F: Real>(u: &Matrix<F>, filled: &[usize], n: usize) -> Vec<F> {
    let residual = |e: usize| -> Vec<F> {
        let mut r = vec![F::zero(); n];
        r[e] = F::one();
        for _ in 0..2 {
            for &j in filled {
                let mut dot = F::zero();
                for i in 0..n {
                    dot += u.get(i, j) * r[i];
                }
                for i in 0..n {
                    r[i] -= dot * u.get(i, j);
                }
            }
        }
        r
    };
    let mut best = 0;
    let mut best_norm = F::neg_infinity();
    for e in 0..n {
        let r = residual(e);
        let norm = r.iter().map(|&x| x * x).fold(F::zero(), |a, x| a + x).sqrt();
        if norm > best_norm {
            best_norm = norm;
            best = e;
        }
    }
    let r = residual(best);
    let norm = r.iter().map(|&x| x * x).fold(F::zero(), |a, x| a + x).sqrt();
    r.into_iter().map(|x| x / norm).collect()
}

fn svd_tall<F: Real>(m: &Matrix<F>) -> Result<SvdFactors<F>> {
    let qr = economy_qr(m)?;
    let (ub, s, v) = jacobi_svd(&qr.r);
    Ok(SvdFactors {
        u: qr.q.mul(&ub)?,
        s,
        v,
    })
}

/// Economy SVD. For a `rows x cols` input, `u` is `rows x min`, `v` is
/// `cols x min` with `min = min(rows, cols)`, and `s` holds the singular
/// values in descending order. Sign convention: the first entry of each
/// column of `u` that is not negligible relative to the column maximum is
/// made nonnegative (flipping the matching column of `v`).
pub fn svd<F: Real>(m: &Matrix<F>) -> Result<SvdFactors<F>> {
    let mut f = if m.rows() < m.cols() {
        let t = svd_tall(&m.transposed())?;
        SvdFactors {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    } else {
        svd_tall(m)?
    };
    fix_signs(&mut f.u, &mut f.v);
    Ok(f)
}

fn fix_signs<F: Real>(u: &mut Matrix<F>, v: &mut Matrix<F>) {
    debug_assert_eq!(u.cols(), v.cols());
    for j in 0..u.cols() {
        let col = u.col(j);
        let mx = col.iter().fold(F::zero(), |a, &x| a.max(x.abs()));
        if mx == F::zero() {
            continue;
        }
        let thr = mx * F::of(1e-8);
        let lead = col.iter().find(|x| x.abs() > thr);
        if matches!(lead, Some(x) if *x < F::zero()) {
            for i in 0..u.rows() {
                let val = u.get(i, j);
                u.set(i, j, -val);
            }
            for i in 0..v.rows() {
                let val = v.get(i, j);
                v.set(i, j, -val);
            }
        }
    }
}

/// Number of singular values strictly above the truncation cutoff: `eps`
/// itself when positive, `sigma_max * max(rows, cols) * u` when `eps = 0`
/// (keep only the numerically nonzero part).
fn truncation_rank<F: Real>(s: &[F], rows: usize, cols: usize, eps: F) -> Result<usize> {
    if eps < F::zero() {
        return Err(Error::Rank(format!(
            "pseudoinverse truncation threshold must be nonnegative, got {eps}"
        )));
    }
    let smax = s.first().copied().unwrap_or_else(F::zero);
    let cutoff = if eps > F::zero() {
        eps
    } else {
        smax * F::of_usize(rows.max(cols)) * F::unit_roundoff()
    };
    Ok(s.iter().take_while(|&&x| x > cutoff).count())
}

/// Truncated pseudoinverse: singular values strictly above `eps` are
/// inverted, the rest are dropped. With `eps = 0` the cutoff falls back to
/// `sigma_max * max(rows, cols) * u`, i.e. only the numerically nonzero part
/// is inverted. Returns a `cols x rows` matrix (the zero matrix when nothing
/// survives the cutoff).
pub fn eps_pseudoinverse<F: Real>(m: &Matrix<F>, eps: F) -> Result<Matrix<F>> {
    let f = svd(m)?;
    let rank = truncation_rank(&f.s, m.rows(), m.cols(), eps)?;
    if rank == 0 {
        return Ok(Matrix::zeros(m.cols(), m.rows()));
    }
    let mut vs = f.v.columns(0, rank)?;
    for j in 0..rank {
        let inv = F::one() / f.s[j];
        for x in vs.col_mut(j) {
            *x *= inv;
        }
    }
    vs.mul_t(&f.u.columns(0, rank)?)
}

/// Computes `b * pinv_eps(m)` without materializing the pseudoinverse,
/// as `((b V_1) Sigma_1^{-1}) U_1^T` over the singular triplets of `m` that
/// survive the cutoff (same truncation rule as [`eps_pseudoinverse`]).
///
/// The explicit pseudoinverse has entries of order `1 / eps`, so forming it
/// first pushes every inner product of the subsequent multiply through
/// intermediates that large and the rounding noise they carry. This ordering
/// keeps all intermediates at the scale of `b` and applies `1 / sigma_j` as
/// an exact column scaling, which is worth many digits once `m` has singular
/// values near the cutoff.
pub fn mul_eps_pseudoinverse<F: Real>(b: &Matrix<F>, m: &Matrix<F>, eps: F) -> Result<Matrix<F>> {
    if b.cols() != m.cols() {
        return Err(Error::Shape(format!(
            "cannot apply the pseudoinverse of a {}x{} matrix on the right of {}x{}",
            m.rows(),
            m.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let f = svd(m)?;
    let rank = truncation_rank(&f.s, m.rows(), m.cols(), eps)?;
    if rank == 0 {
        return Ok(Matrix::zeros(b.rows(), m.rows()));
    }
    let mut g = b.mul(&f.v.columns(0, rank)?)?;
    for j in 0..rank {
        let inv = F::one() / f.s[j];
        for x in g.col_mut(j) {
            *x *= inv;
        }
    }
    g.mul_t(&f.u.columns(0, rank)?)
}

/// Solves `X * R = B` for `X` given upper triangular `R` (`n x n`) and `B`
/// (`q x n`). Fails with [`Error::SingularTriangular`] only when a diagonal
/// entry of `R` is exactly zero. Tiny nonzero pivots are solved against as
/// is: the amplified columns they produce cancel downstream when the result
/// is recombined with the orthogonal factor of the same QR, so flagging them
/// here would discard accuracy rather than protect it.
pub fn solve_upper_triangular<F: Real>(r: &Matrix<F>, b: &Matrix<F>) -> Result<Matrix<F>> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::Shape(format!(
            "triangular factor must be square, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if b.cols() != n {
        return Err(Error::Shape(format!(
            "right-hand side has {} columns, expected {n}",
            b.cols()
        )));
    }
    for j in 0..n {
        if r.get(j, j) == F::zero() {
            return Err(Error::SingularTriangular { index: j });
        }
    }
    let q = b.rows();
    let mut x = Matrix::zeros(q, n);
    for j in 0..n {
        let mut col: Vec<F> = b.col(j).to_vec();
        for i in 0..j {
            let rij = r.get(i, j);
            if rij != F::zero() {
                let xi = x.col(i);
                for (c, &xv) in col.iter_mut().zip(xi) {
                    *c -= rij * xv;
                }
            }
        }
        let inv = F::one() / r.get(j, j);
        for (dst, c) in x.col_mut(j).iter_mut().zip(col) {
            *dst = c * inv;
        }
    }
    Ok(x)
}

/// Largest singular value. Small matrices (shorter side at most 1024) go
/// through the SVD; larger ones use power iteration on `M^T M` with relative
/// tolerance `1e-8` and at most 200 iterations from a seeded Gaussian start.
pub fn spectral_norm<F: Real>(m: &Matrix<F>) -> Result<F> {
    if m.rows().min(m.cols()) <= 1024 {
        let f = svd(m)?;
        return Ok(f.s.first().copied().unwrap_or_else(F::zero));
    }
    let mut rng = SeededRng::new(0, 0);
    let mut v = Matrix::from_fn(m.cols(), 1, |_, _| F::standard_normal(&mut rng));
    let nv = v.frobenius_norm();
    v.scale_in_place(F::one() / nv);
    let mut sigma_prev = F::zero();
    let mut sigma = F::zero();
    for _ in 0..200 {
        let w = m.mul(&v)?;
        sigma = w.frobenius_norm();
        if sigma == F::zero() {
            return Ok(F::zero());
        }
        let mut z = m.t_mul(&w)?;
        let nz = z.frobenius_norm();
        z.scale_in_place(F::one() / nz);
        v = z;
        if (sigma - sigma_prev).abs() <= F::of(1e-8) * sigma {
            break;
        }
        sigma_prev = sigma;
    }
    Ok(sigma)
}

/// Orthonormal basis of the orthogonal complement of the column span of `q`
/// (`n x k` with orthonormal columns, `k < n`): returns `n x (n - k)`.
pub fn orthonormal_complement<F: Real>(q: &Matrix<F>) -> Result<Matrix<F>> {
    let n = q.rows();
    let k = q.cols();
    if k >= n {
        return Err(Error::Shape(format!(
            "complement of a {n}x{k} basis is empty"
        )));
    }
    let h = householder_factor(q);
    let full = h.build_q(n);
    full.columns(k, n)
}
