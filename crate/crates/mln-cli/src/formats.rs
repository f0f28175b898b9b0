//! Binary persistence for dense tensors and Tucker decompositions.
//!
//! Both formats are little-endian and deliberately dumb so that any language
//! can parse them:
//!
//! - `TNSR`: magic `TNSR`, version byte, order as u8, each dimension as u64,
//!   then the values as f64 in the tensor's own linearization order.
//! - `TUCK`: magic `TUCK`, version byte, order as u8, core dimensions as
//!   u64s, per-factor `(rows, cols)` u64 pairs, then the core values followed
//!   by each factor's values (column-major), all f64.
//!
//! Round-trips are bit-exact.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use mln_core::mln::TuckerTensor;
use mln_core::tensor::DenseTensor;
use mln_core::{Matrix64, Tensor64, Tucker64};

const TENSOR_MAGIC: &[u8; 4] = b"TNSR";
const TUCKER_MAGIC: &[u8; 4] = b"TUCK";
const VERSION: u8 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(
            self.pos + n <= self.buf.len(),
            "file truncated at byte {}",
            self.pos
        );
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * count)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        ensure!(
            self.pos == self.buf.len(),
            "{} trailing bytes after the payload",
            self.buf.len() - self.pos
        );
        Ok(())
    }
}

fn push_header(out: &mut Vec<u8>, magic: &[u8; 4], dims: &[usize]) {
    out.extend_from_slice(magic);
    out.push(VERSION);
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
}

fn push_values(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(8 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_header(r: &mut Reader, magic: &[u8; 4]) -> Result<Vec<usize>> {
    let got = r.take(4)?;
    if got != magic {
        bail!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(got),
            String::from_utf8_lossy(magic)
        );
    }
    let version = r.u8()?;
    ensure!(version == VERSION, "unsupported format version {version}");
    let d = r.u8()? as usize;
    ensure!(d >= 1, "tensor order must be at least 1");
    (0..d).map(|_| Ok(r.u64()? as usize)).collect()
}

pub fn write_tensor(path: &Path, t: &Tensor64) -> Result<()> {
    ensure!(t.order() <= u8::MAX as usize, "order does not fit in a byte");
    let mut out = Vec::new();
    push_header(&mut out, TENSOR_MAGIC, t.dims());
    push_values(&mut out, t.values());
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_tensor(path: &Path) -> Result<Tensor64> {
    let buf = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut r = Reader::new(&buf);
    let dims = read_header(&mut r, TENSOR_MAGIC)?;
    let count = dims.iter().product();
    let values = r.f64s(count)?;
    r.finish()?;
    Ok(DenseTensor::new(dims, values)?)
}

pub fn write_tucker(path: &Path, t: &Tucker64) -> Result<()> {
    ensure!(t.order() <= u8::MAX as usize, "order does not fit in a byte");
    let mut out = Vec::new();
    push_header(&mut out, TUCKER_MAGIC, t.core().dims());
    for f in t.factors() {
        out.extend_from_slice(&(f.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(f.cols() as u64).to_le_bytes());
    }
    push_values(&mut out, t.core().values());
    for f in t.factors() {
        push_values(&mut out, f.values());
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_tucker(path: &Path) -> Result<Tucker64> {
    let buf = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut r = Reader::new(&buf);
    let core_dims = read_header(&mut r, TUCKER_MAGIC)?;
    let shapes = (0..core_dims.len())
        .map(|_| Ok((r.u64()? as usize, r.u64()? as usize)))
        .collect::<Result<Vec<_>>>()?;
    let core = DenseTensor::new(core_dims.clone(), r.f64s(core_dims.iter().product())?)?;
    let factors = shapes
        .into_iter()
        .map(|(rows, cols)| Ok(Matrix64::new(rows, cols, r.f64s(rows * cols)?)?))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(TuckerTensor::new(core, factors)?)
}
