//! Column-major dense matrices with a GEMM core.
//!
//! Multiplications funnel through [`gemm_into`], which dispatches `f32`/`f64`
//! to the `matrixmultiply` kernels and falls back to a reference triple loop
//! for any other scalar. Transposes are handled by stride juggling, so no
//! operand is ever copied just to be transposed.

use std::any::TypeId;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense matrix stored column-major: entry `(i, j)` lives at `i + j * rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    values: Vec<F>,
}

impl<F: Real> Matrix<F> {
    /// Wraps a column-major buffer; `values.len()` must equal `rows * cols`.
    pub fn new(rows: usize, cols: usize, values: Vec<F>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            values: vec![F::zero(); rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    /// Builds a matrix from a function of `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.values[i + j * rows] = f(i, j);
            }
        }
        m
    }

    /// Builds from rows given in row-major order (convenient in tests).
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Dimension("from_rows needs a nonempty grid".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> F {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row + col * self.rows]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: F) {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row + col * self.rows] = value;
    }

    /// Contiguous slice holding column `col`.
    pub fn col(&self, col: usize) -> &[F] {
        &self.values[col * self.rows..(col + 1) * self.rows]
    }

    pub fn col_mut(&mut self, col: usize) -> &mut [F] {
        &mut self.values[col * self.rows..(col + 1) * self.rows]
    }

    /// Materialized transpose.
    pub fn transposed(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Copy of columns `lo..hi` as a new matrix.
    pub fn columns(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.cols {
            return Err(Error::Dimension(format!(
                "column range {lo}..{hi} invalid for {} columns",
                self.cols
            )));
        }
        Self::new(
            self.rows,
            hi - lo,
            self.values[lo * self.rows..hi * self.rows].to_vec(),
        )
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> F {
        self.values
            .iter()
            .map(|&v| v * v)
            .fold(F::zero(), |acc, v| acc + v)
            .sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> F {
        self.values
            .iter()
            .fold(F::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn scale_in_place(&mut self, factor: F) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::new(self.rows, self.cols, values)
    }

    /// `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut c = Self::zeros(self.rows, other.cols);
        gemm_into(F::one(), self, false, other, false, F::zero(), &mut c)?;
        Ok(c)
    }

    /// `self^T * other`.
    pub fn t_mul(&self, other: &Self) -> Result<Self> {
        let mut c = Self::zeros(self.cols, other.cols);
        gemm_into(F::one(), self, true, other, false, F::zero(), &mut c)?;
        Ok(c)
    }

    /// `self * other^T`.
    pub fn mul_t(&self, other: &Self) -> Result<Self> {
        let mut c = Self::zeros(self.rows, other.rows);
        gemm_into(F::one(), self, false, other, true, F::zero(), &mut c)?;
        Ok(c)
    }
}

/// Effective shape and strides of an operand, honoring a transpose flag.
fn operand<F>(m: &Matrix<F>, trans: bool) -> (usize, usize, isize, isize) {
    if trans {
        (m.cols, m.rows, m.rows as isize, 1)
    } else {
        (m.rows, m.cols, 1, m.rows as isize)
    }
}

/// `c = alpha * op(a) * op(b) + beta * c` where `op` is optional transpose.
pub fn gemm_into<F: Real>(
    alpha: F,
    a: &Matrix<F>,
    trans_a: bool,
    b: &Matrix<F>,
    trans_b: bool,
    beta: F,
    c: &mut Matrix<F>,
) -> Result<()> {
    let (m, ka, rsa, csa) = operand(a, trans_a);
    let (kb, n, rsb, csb) = operand(b, trans_b);
    if ka != kb {
        return Err(Error::Shape(format!(
            "inner dimensions disagree: {m}x{ka} times {kb}x{n}"
        )));
    }
    if c.rows != m || c.cols != n {
        return Err(Error::Shape(format!(
            "output is {}x{}, expected {m}x{n}",
            c.rows, c.cols
        )));
    }
    let csc = m as isize;
    gemm_raw(
        m, ka, n, alpha, &a.values, rsa, csa, &b.values, rsb, csb, beta, &mut c.values, 1, csc,
    );
    Ok(())
}

/// Strided GEMM on raw column-major buffers; shapes are the caller's duty.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_raw<F: Real>(
    m: usize,
    k: usize,
    n: usize,
    alpha: F,
    a: &[F],
    rsa: isize,
    csa: isize,
    b: &[F],
    rsb: isize,
    csb: isize,
    beta: F,
    c: &mut [F],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for j in 0..n as isize {
            for i in 0..m as isize {
                let idx = (i * rsc + j * csc) as usize;
                c[idx] = beta * c[idx];
            }
        }
        return;
    }
    if TypeId::of::<F>() == TypeId::of::<f64>() {
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha.to_f64_lossy(),
                a.as_ptr() as *const f64,
                rsa,
                csa,
                b.as_ptr() as *const f64,
                rsb,
                csb,
                beta.to_f64_lossy(),
                c.as_mut_ptr() as *mut f64,
                rsc,
                csc,
            );
        }
    } else if TypeId::of::<F>() == TypeId::of::<f32>() {
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                alpha.to_f64_lossy() as f32,
                a.as_ptr() as *const f32,
                rsa,
                csa,
                b.as_ptr() as *const f32,
                rsb,
                csb,
                beta.to_f64_lossy() as f32,
                c.as_mut_ptr() as *mut f32,
                rsc,
                csc,
            );
        }
    } else {
        // Reference path for any further Real implementations.
        for j in 0..n as isize {
            for i in 0..m as isize {
                let mut acc = F::zero();
                for t in 0..k as isize {
                    let av = a[(i * rsa + t * csa) as usize];
                    let bv = b[(t * rsb + j * csb) as usize];
                    acc += av * bv;
                }
                let idx = (i * rsc + j * csc) as usize;
                c[idx] = alpha * acc + beta * c[idx];
            }
        }
    }
}

/// Kronecker product `a (x) b`.
pub fn kron<F: Real>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = Matrix::zeros(rows, cols);
    for ja in 0..a.cols {
        for jb in 0..b.cols {
            let col = ja * b.cols + jb;
            for ia in 0..a.rows {
                let av = a.get(ia, ja);
                for ib in 0..b.rows {
                    out.set(ia * b.rows + ib, col, av * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// Kronecker chain of all matrices except the one at `exclude`, taken in
/// descending index order: for four factors and `exclude = 1` this is
/// `m3 (x) m2 (x) m0`.
///
/// This matches how the columns of a mode-`exclude` unfolding are ordered, so
/// multiplying an unfolding by this chain transposed applies the remaining
/// factors to their modes. Mode indices are zero-based. Requires at least two
/// matrices so that the chain is nonempty.
pub fn kron_chain_excluding<F: Real>(mats: &[Matrix<F>], exclude: usize) -> Result<Matrix<F>> {
    if mats.len() < 2 {
        return Err(Error::Dimension(format!(
            "kron chain needs at least two matrices, got {}",
            mats.len()
        )));
    }
    if exclude >= mats.len() {
        return Err(Error::ModeIndex {
            mode: exclude,
            order: mats.len(),
        });
    }
    let mut acc: Option<Matrix<F>> = None;
    for (i, m) in mats.iter().enumerate().rev() {
        if i == exclude {
            continue;
        }
        acc = Some(match acc {
            None => m.clone(),
            Some(a) => kron(&a, m),
        });
    }
    Ok(acc.expect("chain has at least one factor"))
}
