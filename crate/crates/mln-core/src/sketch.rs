//! Seeded random sketch operators.
//!
//! All randomness flows through [`SeededRng`], a ChaCha stream cipher RNG
//! keyed by `(seed, stream)`, so a sketch is a pure function of its
//! [`SketchSpec`]. Distinct roles inside one sketch (entries, column
//! sampling, row signs) use distinct streams; distinct modes and the X/Y
//! sides of an approximation derive distinct seeds via [`sketch_seed`].

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Stream used for dense entries (Gaussian fills, factor sketches).
pub const STREAM_ENTRIES: u64 = 0;
/// Stream used for sampling column subsets without replacement.
pub const STREAM_COLUMN_SAMPLES: u64 = 1;
/// Stream used for random row signs.
pub const STREAM_ROW_SIGNS: u64 = 2;

/// Deterministic RNG keyed by `(seed, stream)`.
///
/// Backed by ChaCha with 8 rounds; the same key yields the same draw
/// sequence on every platform and every run of the same build.
#[derive(Debug, Clone)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a salt into an independent-looking seed.
pub fn mix_seed(master: u64, salt: u64) -> u64 {
    splitmix64(master ^ splitmix64(salt))
}

/// Which side of an approximation a sketch serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchRole {
    /// Range side (applied to unfolding columns).
    X,
    /// Corange side (applied to unfolding rows).
    Y,
}

/// Derives the per-mode, per-role sketch seed from a master seed, so that
/// every sketch in a multi-mode run is independent yet reproducible.
pub fn sketch_seed(master: u64, mode: usize, role: SketchRole) -> u64 {
    let tag = ((mode as u64) << 1)
        | match role {
            SketchRole::X => 0,
            SketchRole::Y => 1,
        };
    mix_seed(master, 0x534B_4554_4348_0000 | tag)
}

/// Supported sketch distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    /// Dense i.i.d. standard Gaussian entries.
    Gaussian,
    /// Subsampled randomized Hadamard transform: random row signs, Sylvester
    /// Hadamard matrix of the next power of two truncated to `rows` rows,
    /// `cols` columns sampled without replacement, scaled by `1/sqrt(rows)`.
    Srht,
    /// Columns sampled without replacement from a Kronecker product of small
    /// Gaussian factor sketches (one per `factor_dims` entry, the first
    /// factor fastest).
    KronSubsampled,
    /// Khatri-Rao (columnwise Kronecker) product of Gaussian factor sketches.
    KhatriRao,
}

impl SketchKind {
    /// Kinds that factor over `factor_dims` and support structured
    /// application without materializing the full sketch.
    pub fn is_structured(self) -> bool {
        matches!(self, SketchKind::KronSubsampled | SketchKind::KhatriRao)
    }
}

/// Complete description of one sketch draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Row dimensions of the factor sketches for structured kinds; their
    /// product must equal `rows`.
    pub factor_dims: Option<Vec<usize>>,
}

impl SketchSpec {
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::Gaussian,
            rows,
            cols,
            seed,
            factor_dims: None,
        }
    }

    pub fn srht(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::Srht,
            rows,
            cols,
            seed,
            factor_dims: None,
        }
    }

    pub fn kron_subsampled(factor_dims: Vec<usize>, cols: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::KronSubsampled,
            rows: factor_dims.iter().product(),
            cols,
            seed,
            factor_dims: Some(factor_dims),
        }
    }

    pub fn khatri_rao(factor_dims: Vec<usize>, cols: usize, seed: u64) -> Self {
        Self {
            kind: SketchKind::KhatriRao,
            rows: factor_dims.iter().product(),
            cols,
            seed,
            factor_dims: Some(factor_dims),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::SketchSpec(format!(
                "sketch dimensions must be positive, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.cols > self.rows {
            return Err(Error::SketchSpec(format!(
                "sketch must not be wide: {} columns exceed {} rows",
                self.cols, self.rows
            )));
        }
        match &self.factor_dims {
            Some(fd) => {
                if fd.is_empty() || fd.iter().any(|&d| d == 0) {
                    return Err(Error::SketchSpec(format!(
                        "factor dimensions must be nonempty and positive, got {fd:?}"
                    )));
                }
                let prod: usize = fd.iter().product();
                if prod != self.rows {
                    return Err(Error::SketchSpec(format!(
                        "factor dimensions {fd:?} multiply to {prod}, expected {} rows",
                        self.rows
                    )));
                }
            }
            None => {
                if self.kind.is_structured() {
                    return Err(Error::SketchSpec(
                        "structured sketch kinds require factor_dims".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `+1`/`-1` from the parity of `popcount(i & j)`: entry `(i, j)` of the
/// Sylvester Hadamard matrix of any sufficient power-of-two order.
fn hadamard_sign<F: Real>(i: usize, j: usize) -> F {
    if (i & j).count_ones() % 2 == 0 {
        F::one()
    } else {
        -F::one()
    }
}

/// Appends one Kronecker factor from the slow side: the result has
/// `out[b + acc_len * a] = acc[b] * col[a]`, keeping earlier factors fastest.
fn outer_extend<F: Real>(acc: &[F], col: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(acc.len() * col.len());
    for &a in col {
        for &b in acc {
            out.push(b * a);
        }
    }
    out
}

/// Factor sketches and sampled column indices of a subsampled Kronecker
/// sketch, shared by the dense and structured application paths.
struct KronParts<F> {
    omegas: Vec<Matrix<F>>,
    indices: Vec<usize>,
    factor_cols: usize,
}

/// Smallest `c` with `c^p >= cols`.
fn factor_cols_for(cols: usize, p: usize) -> usize {
    let pow = |c: usize| (c as u128).saturating_pow(p as u32);
    let mut c = (cols as f64).powf(1.0 / p as f64).ceil() as usize;
    c = c.max(1);
    while c > 1 && pow(c - 1) >= cols as u128 {
        c -= 1;
    }
    while pow(c) < cols as u128 {
        c += 1;
    }
    c
}

fn kron_parts<F: Real>(spec: &SketchSpec) -> KronParts<F> {
    let fd = spec
        .factor_dims
        .as_ref()
        .expect("validated structured spec has factor_dims");
    let factor_cols = factor_cols_for(spec.cols, fd.len());
    let total: usize = factor_cols.pow(fd.len() as u32);
    let mut entries = SeededRng::new(spec.seed, STREAM_ENTRIES);
    let omegas = fd
        .iter()
        .map(|&m| Matrix::from_fn(m, factor_cols, |_, _| F::standard_normal(&mut entries)))
        .collect();
    let mut sampler = SeededRng::new(spec.seed, STREAM_COLUMN_SAMPLES);
    let indices = rand::seq::index::sample(&mut sampler, total, spec.cols).into_vec();
    KronParts {
        omegas,
        indices,
        factor_cols,
    }
}

/// Digits of `index` in base `radix`, least significant first.
fn mixed_radix(mut index: usize, radix: usize, count: usize) -> Vec<usize> {
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        digits.push(index % radix);
        index /= radix;
    }
    digits
}

fn khatri_rao_factors<F: Real>(spec: &SketchSpec) -> Vec<Matrix<F>> {
    let fd = spec
        .factor_dims
        .as_ref()
        .expect("validated structured spec has factor_dims");
    let mut entries = SeededRng::new(spec.seed, STREAM_ENTRIES);
    fd.iter()
        .map(|&m| Matrix::from_fn(m, spec.cols, |_, _| F::standard_normal(&mut entries)))
        .collect()
}

/// Materializes the sketch described by `spec` as a dense `rows x cols`
/// matrix. Bit-identical for identical specs within one build.
pub fn draw_sketch<F: Real>(spec: &SketchSpec) -> Result<Matrix<F>> {
    spec.validate()?;
    match spec.kind {
        SketchKind::Gaussian => {
            let mut rng = SeededRng::new(spec.seed, STREAM_ENTRIES);
            Ok(Matrix::from_fn(spec.rows, spec.cols, |_, _| {
                F::standard_normal(&mut rng)
            }))
        }
        SketchKind::Srht => {
            let padded = spec.rows.next_power_of_two();
            let mut sign_rng = SeededRng::new(spec.seed, STREAM_ROW_SIGNS);
            let signs: Vec<F> = (0..spec.rows)
                .map(|_| {
                    if sign_rng.random::<bool>() {
                        F::one()
                    } else {
                        -F::one()
                    }
                })
                .collect();
            let mut sampler = SeededRng::new(spec.seed, STREAM_COLUMN_SAMPLES);
            let picked = rand::seq::index::sample(&mut sampler, padded, spec.cols).into_vec();
            let scale = F::one() / F::of_usize(spec.rows).sqrt();
            Ok(Matrix::from_fn(spec.rows, spec.cols, |i, c| {
                signs[i] * hadamard_sign::<F>(i, picked[c]) * scale
            }))
        }
        SketchKind::KronSubsampled => {
            let parts: KronParts<F> = kron_parts(spec);
            let d = parts.omegas.len();
            let mut out = Matrix::zeros(spec.rows, spec.cols);
            for (c, &t) in parts.indices.iter().enumerate() {
                let digits = mixed_radix(t, parts.factor_cols, d);
                let mut col = vec![F::one()];
                for (omega, &digit) in parts.omegas.iter().zip(&digits) {
                    col = outer_extend(&col, omega.col(digit));
                }
                out.col_mut(c).copy_from_slice(&col);
            }
            Ok(out)
        }
        SketchKind::KhatriRao => {
            let factors: Vec<Matrix<F>> = khatri_rao_factors(spec);
            let mut out = Matrix::zeros(spec.rows, spec.cols);
            for c in 0..spec.cols {
                let mut col = vec![F::one()];
                for omega in &factors {
                    col = outer_extend(&col, omega.col(c));
                }
                out.col_mut(c).copy_from_slice(&col);
            }
            Ok(out)
        }
    }
}

/// Applies the structured sketch described by `spec` to a Kronecker chain of
/// the given matrices with the one at `exclude` left out: the result equals
/// `kron_chain_excluding(factors, exclude) * draw_sketch(spec)` but is
/// evaluated one small factor at a time, never materializing either the
/// chain or the full sketch.
///
/// `factors[i]` may be any `q_i x n_i` matrix; the `n_i` (skipping
/// `exclude`, in ascending mode order) must match `spec.factor_dims`.
pub fn apply_structured_sketch<F: Real>(
    factors: &[Matrix<F>],
    spec: &SketchSpec,
    exclude: usize,
) -> Result<Matrix<F>> {
    spec.validate()?;
    if !spec.kind.is_structured() {
        return Err(Error::SketchSpec(format!(
            "structured application requires a structured sketch kind, got {:?}",
            spec.kind
        )));
    }
    if exclude >= factors.len() {
        return Err(Error::ModeIndex {
            mode: exclude,
            order: factors.len(),
        });
    }
    let chain: Vec<&Matrix<F>> = factors
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != exclude)
        .map(|(_, m)| m)
        .collect();
    let fd = spec
        .factor_dims
        .as_ref()
        .expect("validated structured spec has factor_dims");
    if chain.len() != fd.len() || chain.iter().zip(fd).any(|(m, &d)| m.cols() != d) {
        return Err(Error::SketchSpec(format!(
            "factor column counts {:?} do not match factor_dims {fd:?}",
            chain.iter().map(|m| m.cols()).collect::<Vec<_>>()
        )));
    }
    let out_rows: usize = chain.iter().map(|m| m.rows()).product();
    let mut out = Matrix::zeros(out_rows, spec.cols);
    match spec.kind {
        SketchKind::KronSubsampled => {
            let parts: KronParts<F> = kron_parts(spec);
            let projected: Vec<Matrix<F>> = chain
                .iter()
                .zip(&parts.omegas)
                .map(|(m, omega)| m.mul(omega))
                .collect::<Result<_>>()?;
            for (c, &t) in parts.indices.iter().enumerate() {
                let digits = mixed_radix(t, parts.factor_cols, projected.len());
                let mut col = vec![F::one()];
                for (p, &digit) in projected.iter().zip(&digits) {
                    col = outer_extend(&col, p.col(digit));
                }
                out.col_mut(c).copy_from_slice(&col);
            }
        }
        SketchKind::KhatriRao => {
            let omegas: Vec<Matrix<F>> = khatri_rao_factors(spec);
            let projected: Vec<Matrix<F>> = chain
                .iter()
                .zip(&omegas)
                .map(|(m, omega)| m.mul(omega))
                .collect::<Result<_>>()?;
            for c in 0..spec.cols {
                let mut col = vec![F::one()];
                for p in &projected {
                    col = outer_extend(&col, p.col(c));
                }
                out.col_mut(c).copy_from_slice(&col);
            }
        }
        _ => unreachable!("structured kinds handled above"),
    }
    Ok(out)
}
