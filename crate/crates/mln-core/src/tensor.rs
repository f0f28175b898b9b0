//! Dense tensors with mode-k unfolding, folding and mode products.
//!
//! Entries are stored with the first index fastest (generalized column-major):
//! the entry at zero-based multi-index `(i_0, ..., i_{d-1})` of a tensor with
//! dimensions `(I_0, ..., I_{d-1})` lives at flat offset
//! `i_0 + i_1 * I_0 + i_2 * I_0 * I_1 + ...`.
//!
//! The mode-`k` unfolding is the `I_k x (prod of the others)` matrix whose
//! column index groups the remaining indices with the lower modes fastest:
//! column `= inner + low * outer` where `inner` encodes modes `< k`, `outer`
//! encodes modes `> k` and `low = I_0 * ... * I_{k-1}`. With this convention
//! applying matrices `X_i` to every mode satisfies
//! `(T x_0 X_0 ... x_{d-1} X_{d-1})_(k) = X_k T_(k) (X_(x/k))^T` where
//! `X_(x/k)` is the descending Kronecker chain of the others, as produced by
//! [`crate::matrix::kron_chain_excluding`].
//!
//! All mode indices in this crate are zero-based.

use crate::error::{Error, Result};
use crate::matrix::{gemm_raw, Matrix};
use crate::scalar::Real;

/// Dense tensor of order `d >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<F> {
    dims: Vec<usize>,
    values: Vec<F>,
}

impl<F: Real> DenseTensor<F> {
    /// Wraps a flat buffer; `values.len()` must equal the product of `dims`.
    pub fn new(dims: Vec<usize>, values: Vec<F>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("tensor order must be at least 1".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "all dimensions must be positive, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if values.len() != len {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot hold a tensor with dimensions {dims:?}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    /// All-zero tensor.
    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len: usize = dims.iter().product();
        Self::new(dims, vec![F::zero(); len])
    }

    /// Builds entry by entry from the zero-based multi-index.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> F) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let d = t.order();
        let mut idx = vec![0usize; d];
        for v in &mut t.values {
            *v = f(&idx);
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < t.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Tensor order (number of modes).
    pub fn order(&self) -> usize {
        self.dims.len()
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

    /// Flat offset of a zero-based multi-index.
    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut offset = 0;
        let mut stride = 1;
        for (i, &d) in index.iter().zip(&self.dims) {
            debug_assert!(*i < d);
            offset += i * stride;
            stride *= d;
        }
        offset
    }

    pub fn get(&self, index: &[usize]) -> F {
        self.values[self.linear_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: F) {
        let at = self.linear_index(index);
        self.values[at] = value;
    }

    /// Frobenius norm (square root of the sum of squared entries).
    pub fn frobenius_norm(&self) -> F {
        self.values
            .iter()
            .map(|&v| v * v)
            .fold(F::zero(), |acc, v| acc + v)
            .sqrt()
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "cannot subtract tensor with dimensions {:?} from one with {:?}",
                other.dims, self.dims
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a - b)
            .collect();
        Self::new(self.dims.clone(), values)
    }
}

fn check_mode(order: usize, k: usize) -> Result<()> {
    if k >= order {
        Err(Error::ModeIndex { mode: k, order })
    } else {
        Ok(())
    }
}

/// Splits the dimensions around mode `k` into
/// `(low, n_k, high) = (prod below, dims[k], prod above)`.
fn split_dims(dims: &[usize], k: usize) -> (usize, usize, usize) {
    let low: usize = dims[..k].iter().product();
    let high: usize = dims[k + 1..].iter().product();
    (low, dims[k], high)
}

/// Materializes the mode-`k` unfolding as an `I_k x (prod of others)` matrix.
pub fn mode_unfold<F: Real>(t: &DenseTensor<F>, k: usize) -> Result<Matrix<F>> {
    check_mode(t.order(), k)?;
    let (low, nk, high) = split_dims(&t.dims, k);
    if k == 0 {
        // Already laid out as the unfolding.
        return Matrix::new(nk, high, t.values.clone());
    }
    let mut out = vec![F::zero(); t.values.len()];
    for outer in 0..high {
        for ik in 0..nk {
            let src = low * (ik + nk * outer);
            let dst = ik + nk * low * outer;
            for inner in 0..low {
                out[dst + nk * inner] = t.values[src + inner];
            }
        }
    }
    Matrix::new(nk, low * high, out)
}

/// Inverse of [`mode_unfold`]: folds a matrix back into a tensor with the
/// given dimensions, of which `dims[k]` must match the row count.
pub fn mode_fold<F: Real>(m: &Matrix<F>, k: usize, dims: &[usize]) -> Result<DenseTensor<F>> {
    check_mode(dims.len(), k)?;
    let (low, nk, high) = split_dims(dims, k);
    if m.rows() != nk || m.cols() != low * high {
        return Err(Error::Shape(format!(
            "cannot fold a {}x{} matrix into mode {k} of dimensions {dims:?}",
            m.rows(),
            m.cols()
        )));
    }
    if k == 0 {
        return DenseTensor::new(dims.to_vec(), m.values().to_vec());
    }
    let src = m.values();
    let mut out = vec![F::zero(); src.len()];
    for outer in 0..high {
        for ik in 0..nk {
            let dst = low * (ik + nk * outer);
            let from = ik + nk * low * outer;
            for inner in 0..low {
                out[dst + inner] = src[from + nk * inner];
            }
        }
    }
    DenseTensor::new(dims.to_vec(), out)
}

/// Mode-`k` product `t x_k x`: applies `x` (shape `p x I_k`) to mode `k`,
/// replacing that dimension by `p`. Equivalent to folding
/// `x * mode_unfold(t, k)` but computed with block GEMMs on the flat buffer.
pub fn mode_product<F: Real>(t: &DenseTensor<F>, k: usize, x: &Matrix<F>) -> Result<DenseTensor<F>> {
    check_mode(t.order(), k)?;
    let (low, nk, high) = split_dims(&t.dims, k);
    if x.cols() != nk {
        return Err(Error::Shape(format!(
            "mode {k} has size {nk} but the factor has {} columns",
            x.cols()
        )));
    }
    let p = x.rows();
    let mut dims = t.dims.clone();
    dims[k] = p;
    let mut out = vec![F::zero(); low * p * high];
    if k == 0 {
        // Single GEMM: x times the buffer read as an I_0 x high matrix.
        gemm_raw(
            p,
            nk,
            high,
            F::one(),
            x.values(),
            1,
            p as isize,
            &t.values,
            1,
            nk as isize,
            F::zero(),
            &mut out,
            1,
            p as isize,
        );
    } else {
        // One GEMM per outer slab: (low x nk) slab times x^T.
        for outer in 0..high {
            gemm_raw(
                low,
                nk,
                p,
                F::one(),
                &t.values[low * nk * outer..low * nk * (outer + 1)],
                1,
                low as isize,
                x.values(),
                p as isize,
                1,
                F::zero(),
                &mut out[low * p * outer..low * p * (outer + 1)],
                1,
                low as isize,
            );
        }
    }
    DenseTensor::new(dims, out)
}

/// Computes `mode_unfold(t, k) * x` (shape `I_k x c`) without materializing
/// the unfolding: the product is accumulated slab by slab from the flat
/// buffer. `x` must have `prod_{i != k} I_i` rows.
pub fn unfolding_product<F: Real>(
    t: &DenseTensor<F>,
    k: usize,
    x: &Matrix<F>,
) -> Result<Matrix<F>> {
    check_mode(t.order(), k)?;
    let (low, nk, high) = split_dims(&t.dims, k);
    if x.rows() != low * high {
        return Err(Error::Shape(format!(
            "mode-{k} unfolding has {} columns but the sketch has {} rows",
            low * high,
            x.rows()
        )));
    }
    let c = x.cols();
    let mut out = Matrix::zeros(nk, c);
    if k == 0 {
        gemm_raw(
            nk,
            high,
            c,
            F::one(),
            &t.values,
            1,
            nk as isize,
            x.values(),
            1,
            x.rows() as isize,
            F::zero(),
            out.values_mut(),
            1,
            nk as isize,
        );
        return Ok(out);
    }
    for outer in 0..high {
        // Slab^T (nk x low) times the matching row block of x, accumulated.
        gemm_raw(
            nk,
            low,
            c,
            F::one(),
            &t.values[low * nk * outer..low * nk * (outer + 1)],
            low as isize,
            1,
            &x.values()[low * outer..],
            1,
            x.rows() as isize,
            F::one(),
            out.values_mut(),
            1,
            nk as isize,
        );
    }
    Ok(out)
}
