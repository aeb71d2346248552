//! Binary kernel tables.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 5 | magic `CAVK1` |
//! | 1 | kind code (0 regular, 1 singular) |
//! | 5 x f64 | `nu_star`, `nu_start`, `rtol`, `c0`, `d0` |
//! | 2 x u64 | `n_nu`, `n_xi` |
//! | f64 arrays | `nu_grid`, `xi_grid`, `value`, `dnu` (row-major by `xi`) |

use std::io::{Read, Write};
use std::path::Path;

use super::coeffs::{CoefficientModel, KernelKind};
use super::remainder::RemainderTable;
use super::transform::KernelTransform;
use crate::error::{CavError, Result};

pub const MAGIC: &[u8; 5] = b"CAVK1";

pub fn to_bytes(kt: &KernelTransform) -> Vec<u8> {
    let t = &kt.remainder;
    let n = kt.model.normalization();
    let mut out = Vec::with_capacity(64 + 8 * (t.nu_grid.len() + t.xi_grid.len() + 2 * t.value.len()));
    out.extend_from_slice(MAGIC);
    out.push(kt.kind.code());
    for x in [t.nu_star, t.nu_start, t.rtol, n.c0, n.d0] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&(t.nu_grid.len() as u64).to_le_bytes());
    out.extend_from_slice(&(t.xi_grid.len() as u64).to_le_bytes());
    for arr in [&t.nu_grid, &t.xi_grid, &t.value, &t.dnu] {
        for x in arr.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CavError::Format("truncated kernel table".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| CavError::Format("array length overflow".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Parses a table and rebuilds the coefficient model it was made with.
pub fn from_bytes(buf: &[u8]) -> Result<KernelTransform> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(5)? != MAGIC {
        return Err(CavError::Format("not a CAVK1 kernel table".into()));
    }
    let kind = KernelKind::from_code(c.take(1)?[0])?;
    let nu_star = c.f64()?;
    let nu_start = c.f64()?;
    let rtol = c.f64()?;
    let (c0, d0) = (c.f64()?, c.f64()?);
    let n_nu = c.u64()? as usize;
    let n_xi = c.u64()? as usize;
    let cells = n_nu
        .checked_mul(n_xi)
        .ok_or_else(|| CavError::Format("grid size overflow".into()))?;
    let nu_grid = c.f64s(n_nu)?;
    let xi_grid = c.f64s(n_xi)?;
    let value = c.f64s(cells)?;
    let dnu = c.f64s(cells)?;
    if c.pos != buf.len() {
        return Err(CavError::Format(format!("{} trailing bytes", buf.len() - c.pos)));
    }
    if n_nu < 2 || n_xi < 2 {
        return Err(CavError::Format("grids need at least two points".into()));
    }
    let model = CoefficientModel::new(nu_star)?;
    let n = model.normalization();
    if (n.c0 - c0).abs() > 1e-10 * c0.abs() || (n.d0 - d0).abs() > 1e-10 * d0.abs() {
        return Err(CavError::Format(format!(
            "stored normalization ({c0}, {d0}) differs from rebuilt ({}, {})",
            n.c0, n.d0
        )));
    }
    let table = RemainderTable {
        kind,
        nu_star,
        nu_start,
        rtol,
        nu_grid,
        xi_grid,
        value,
        dnu,
    };
    KernelTransform::assemble(model, table)
}

pub fn write_table(path: &Path, kt: &KernelTransform) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&to_bytes(kt))?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<KernelTransform> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    from_bytes(&buf)
}
