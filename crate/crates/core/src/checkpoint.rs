//! Binary field checkpoints, all little-endian.
//!
//! 2-D: `n_y: u64, n_z: u64, extent_y: f64, extent_z: f64, t: f64`, then
//! `n_y * n_z` interleaved `(re, im)` pairs of `f64`, row-major over `(y, z)`.
//! 1-D: `n: u64, extent: f64, t: f64`, then `n` pairs.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField1D, ComplexField2D};
use crate::scenario::{GridSpec1D, GridSpec2D};

const HEADER_2D: usize = 40;
const HEADER_1D: usize = 24;

fn push_payload(buf: &mut Vec<u8>, values: &[Complex64]) {
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
}

/// Write through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode_2d(f: &ComplexField2D) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_2D + 16 * f.values.len());
    buf.extend_from_slice(&(f.n_y() as u64).to_le_bytes());
    buf.extend_from_slice(&(f.n_z() as u64).to_le_bytes());
    buf.extend_from_slice(&f.grid.y_axis.extent.to_le_bytes());
    buf.extend_from_slice(&f.grid.z_axis.extent.to_le_bytes());
    buf.extend_from_slice(&f.t.to_le_bytes());
    push_payload(&mut buf, &f.values);
    buf
}

pub fn encode_1d(a: &ComplexField1D) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_1D + 16 * a.values.len());
    buf.extend_from_slice(&(a.values.len() as u64).to_le_bytes());
    buf.extend_from_slice(&a.grid.extent.to_le_bytes());
    buf.extend_from_slice(&a.t.to_le_bytes());
    push_payload(&mut buf, &a.values);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn word(&mut self) -> Result<[u8; 8]> {
        let end = self.pos + 8;
        let w = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(w.try_into().expect("8-byte slice"))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.word()?)).map_err(|_| Error::Checkpoint("size overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.word()?))
    }

    fn payload(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let expected = n.checked_mul(16).and_then(|b| b.checked_add(self.pos));
        if expected != Some(self.bytes.len()) {
            return Err(Error::Checkpoint(format!(
                "payload length {} does not match {n} complex values",
                self.bytes.len().saturating_sub(self.pos)
            )));
        }
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }
}

fn checked_grid(n: usize, extent: f64, field: &'static str) -> Result<GridSpec1D> {
    let g = GridSpec1D { n_points: n, extent };
    g.validate(field).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(g)
}

pub fn decode_2d(bytes: &[u8]) -> Result<ComplexField2D> {
    let mut r = Reader { bytes, pos: 0 };
    let (n_y, n_z) = (r.u64()?, r.u64()?);
    let (extent_y, extent_z, t) = (r.f64()?, r.f64()?, r.f64()?);
    let grid = GridSpec2D { y_axis: checked_grid(n_y, extent_y, "y grid")?, z_axis: checked_grid(n_z, extent_z, "z grid")? };
    let values = r.payload(n_y * n_z)?;
    Ok(ComplexField2D { values, grid, t })
}

pub fn decode_1d(bytes: &[u8]) -> Result<ComplexField1D> {
    let mut r = Reader { bytes, pos: 0 };
    let n = r.u64()?;
    let (extent, t) = (r.f64()?, r.f64()?);
    let grid = checked_grid(n, extent, "tau grid")?;
    let values = r.payload(n)?;
    Ok(ComplexField1D { values, grid, t })
}

pub fn write_checkpoint_2d(path: &Path, f: &ComplexField2D) -> Result<()> {
    write_atomic(path, &encode_2d(f))
}

pub fn read_checkpoint_2d(path: &Path) -> Result<ComplexField2D> {
    decode_2d(&fs::read(path)?)
}

pub fn write_checkpoint_1d(path: &Path, a: &ComplexField1D) -> Result<()> {
    write_atomic(path, &encode_1d(a))
}

pub fn read_checkpoint_1d(path: &Path) -> Result<ComplexField1D> {
    decode_1d(&fs::read(path)?)
}
