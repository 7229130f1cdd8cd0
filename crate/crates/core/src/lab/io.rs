//! Little-endian binary formats for sets, measures and frequency fields.
//!
//! | magic  | body                                                                 |
//! |--------|----------------------------------------------------------------------|
//! | `GSET` | version u32, n u8, m u16, 2n f64 box bounds, count u64, u64 indices   |
//! | `GMES` | as `GSET` with (u64 index, f64 weight) pairs; v2 adds a 4-byte layout |
//! | `GFRQ` | version u32, n u8, step f64, half i64, n f64 center, mass f64, count u64, (re, im) pairs |
//!
//! Loading checks magic, version, lengths and ordering, so any truncation or
//! corruption of the index stream is reported rather than silently accepted.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::complex::ComplexGridMeasure;
use crate::error::{LabError, Result};
use crate::fourier::FrequencyField;
use crate::grid::{DyadicGrid, GridSet, MAX_DIM};
use crate::measure::GridMeasure;

const SET_MAGIC: &[u8; 4] = b"GSET";
const MEASURE_MAGIC: &[u8; 4] = b"GMES";
const FIELD_MAGIC: &[u8; 4] = b"GFRQ";
const SET_VERSION: u32 = 1;
const MEASURE_VERSION: u32 = 2;
const FIELD_VERSION: u32 = 1;

/// How the axes of a stored measure are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Real,
    /// Planar grid read as ℂ, axis 0 real part.
    Complex,
}

impl Layout {
    fn tag(self) -> &'static [u8; 4] {
        match self {
            Layout::Real => b"REAL",
            Layout::Complex => b"CPLX",
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            LabError::Format(format!("truncated file: need {k} bytes at offset {}, have {}", self.pos, self.buf.len()))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Element count, checked against the bytes left.
    fn count(&mut self, elem: usize) -> Result<usize> {
        let c = self.u64()?;
        let left = (self.buf.len() - self.pos) as u64;
        if c.checked_mul(elem as u64).map_or(true, |b| b != left) {
            return Err(LabError::Format(format!("header declares {c} entries but {left} bytes follow")));
        }
        Ok(c as usize)
    }
}

fn expect_magic(r: &mut Reader, magic: &[u8; 4]) -> Result<()> {
    let got = r.array::<4>()?;
    if &got != magic {
        return Err(LabError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn version_err(kind: &str, got: u32, supported: &[u32]) -> LabError {
    LabError::Format(format!("{kind} file version {got} is not supported (readable: {supported:?})"))
}

fn put_grid(out: &mut Vec<u8>, grid: &DyadicGrid) {
    out.push(grid.n() as u8);
    out.extend_from_slice(&(grid.m() as u16).to_le_bytes());
    for x in grid.box_lo().into_iter().chain(grid.box_hi()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn get_grid(r: &mut Reader) -> Result<DyadicGrid> {
    let n = r.u8()? as usize;
    if n == 0 || n > MAX_DIM {
        return Err(LabError::Format(format!("dimension {n} outside 1..=4")));
    }
    let m = r.u16()? as u32;
    let lo = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let hi = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    DyadicGrid::from_bounds(n, m, &lo, &hi)
}

fn strictly_increasing(cells: &[u64]) -> Result<()> {
    if cells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Format("cell indices are not strictly increasing".into()));
    }
    Ok(())
}

pub fn encode_set(s: &GridSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * s.len());
    out.extend_from_slice(SET_MAGIC);
    out.extend_from_slice(&SET_VERSION.to_le_bytes());
    put_grid(&mut out, s.grid());
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    for c in s.cells() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_set(buf: &[u8]) -> Result<GridSet> {
    let mut r = Reader { buf, pos: 0 };
    expect_magic(&mut r, SET_MAGIC)?;
    let v = r.u32()?;
    if v != SET_VERSION {
        return Err(version_err("GSET", v, &[SET_VERSION]));
    }
    let grid = get_grid(&mut r)?;
    let count = r.count(8)?;
    let cells = (0..count).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    strictly_increasing(&cells)?;
    GridSet::new(grid, cells).map_err(|e| LabError::Format(e.to_string()))
}

pub fn encode_measure(mu: &GridMeasure, layout: Layout) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 16 * mu.len());
    out.extend_from_slice(MEASURE_MAGIC);
    out.extend_from_slice(&MEASURE_VERSION.to_le_bytes());
    out.extend_from_slice(layout.tag());
    put_grid(&mut out, mu.grid());
    out.extend_from_slice(&(mu.len() as u64).to_le_bytes());
    for (c, w) in mu.cells().iter().zip(mu.weights()) {
        out.extend_from_slice(&c.to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

/// Version 1 files carry no layout tag and are read as real.
pub fn decode_measure(buf: &[u8]) -> Result<(GridMeasure, Layout)> {
    let mut r = Reader { buf, pos: 0 };
    expect_magic(&mut r, MEASURE_MAGIC)?;
    let layout = match r.u32()? {
        1 => Layout::Real,
        2 => match &r.array::<4>()? {
            b"REAL" => Layout::Real,
            b"CPLX" => Layout::Complex,
            t => return Err(LabError::Format(format!("unknown layout tag {:?}", String::from_utf8_lossy(t)))),
        },
        v => return Err(version_err("GMES", v, &[1, MEASURE_VERSION])),
    };
    let grid = get_grid(&mut r)?;
    if layout == Layout::Complex && grid.n() != 2 {
        return Err(LabError::Format("CPLX layout on a non-planar grid".into()));
    }
    let count = r.count(16)?;
    let mut cells = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        cells.push(r.u64()?);
        weights.push(r.f64()?);
    }
    Ok((GridMeasure::from_parts(grid, cells, weights)?, layout))
}

pub fn encode_field(f: &FrequencyField) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 16 * f.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.push(f.n as u8);
    out.extend_from_slice(&f.step.to_le_bytes());
    out.extend_from_slice(&f.half.to_le_bytes());
    for x in &f.center {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&f.mass.to_le_bytes());
    out.extend_from_slice(&(f.values.len() as u64).to_le_bytes());
    for z in &f.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_field(buf: &[u8]) -> Result<FrequencyField> {
    let mut r = Reader { buf, pos: 0 };
    expect_magic(&mut r, FIELD_MAGIC)?;
    let v = r.u32()?;
    if v != FIELD_VERSION {
        return Err(version_err("GFRQ", v, &[FIELD_VERSION]));
    }
    let n = r.u8()? as usize;
    if n == 0 || n > MAX_DIM {
        return Err(LabError::Format(format!("dimension {n} outside 1..=4")));
    }
    let step = r.f64()?;
    let half = r.i64()?;
    let center = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mass = r.f64()?;
    let count = r.count(16)?;
    let side = u64::try_from(half).ok().and_then(|h| h.checked_mul(2)).map(|s| s + 1);
    if side.and_then(|s| s.checked_pow(n as u32)) != Some(count as u64) || !(step > 0.0) {
        return Err(LabError::Format(format!("{count} values do not fill a node box of half-width {half}")));
    }
    let values = (0..count).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
    Ok(FrequencyField { n, step, half, values, mass, center })
}

pub fn store_set(s: &GridSet, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_set(s))?)
}

pub fn load_set(path: impl AsRef<Path>) -> Result<GridSet> {
    decode_set(&fs::read(path)?)
}

pub fn store_measure(mu: &GridMeasure, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_measure(mu, Layout::Real))?)
}

/// Load a real measure; complex files are rejected.
pub fn load_measure(path: impl AsRef<Path>) -> Result<GridMeasure> {
    match decode_measure(&fs::read(path)?)? {
        (mu, Layout::Real) => Ok(mu),
        (_, Layout::Complex) => Err(LabError::Format("file holds a complex measure".into())),
    }
}

pub fn store_complex(mu: &ComplexGridMeasure, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_measure(mu.measure(), Layout::Complex))?)
}

pub fn load_complex(path: impl AsRef<Path>) -> Result<ComplexGridMeasure> {
    match decode_measure(&fs::read(path)?)? {
        (mu, Layout::Complex) => ComplexGridMeasure::new(mu),
        (_, Layout::Real) => Err(LabError::Format("file holds a real measure".into())),
    }
}

pub fn store_field(f: &FrequencyField, path: impl AsRef<Path>) -> Result<()> {
    Ok(fs::write(path, encode_field(f))?)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<FrequencyField> {
    decode_field(&fs::read(path)?)
}
