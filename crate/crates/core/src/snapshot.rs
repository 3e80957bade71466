//! KSEF binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `KSEF` |
//! | 4 | version, `u32` |
//! | 8 | `n`, `u64` |
//! | 8 | domain length, `f64` |
//! | 1 | reality flag, `0` or `1` |
//! | 16·n² | coefficients, row-major `(re, im)` pairs of `f64` |

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{KseError, Result};
use crate::field::SpectralField;
use crate::grid::{build_grid, Grid};

pub const MAGIC: &[u8; 4] = b"KSEF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 1;

pub fn encode(field: &SpectralField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    out.extend_from_slice(&g.domain_length().to_le_bytes());
    out.push(field.is_real() as u8);
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

/// Parsed header plus coefficients, before a grid is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSnapshot {
    pub n: usize,
    pub domain_length: f64,
    pub real: bool,
    pub coeffs: Vec<Complex64>,
}

pub fn decode(bytes: &[u8]) -> Result<RawSnapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(KseError::Format("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(KseError::Format("bad magic, expected KSEF".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(KseError::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let domain_length = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let real = match bytes[24] {
        0 => false,
        1 => true,
        other => return Err(KseError::Format(format!("bad reality flag {other}"))),
    };
    let body = &bytes[HEADER_LEN..];
    let expected = n
        .checked_mul(n)
        .and_then(|m| m.checked_mul(16))
        .ok_or_else(|| KseError::Format(format!("grid size {n} overflows")))?;
    if body.len() != expected {
        return Err(KseError::Format(format!(
            "expected {expected} coefficient bytes for n = {n}, found {}",
            body.len()
        )));
    }
    let coeffs = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(RawSnapshot {
        n,
        domain_length,
        real,
        coeffs,
    })
}

impl RawSnapshot {
    /// Attaches a 2/3-rule grid built from the header.
    pub fn into_field(self) -> Result<SpectralField> {
        let grid = build_grid(self.n, self.domain_length)?;
        self.into_field_on(&grid)
    }

    pub fn into_field_on(self, grid: &Grid) -> Result<SpectralField> {
        if grid.n() != self.n || grid.domain_length() != self.domain_length {
            return Err(KseError::config(format!(
                "snapshot is n = {}, L = {} but grid is n = {}, L = {}",
                self.n,
                self.domain_length,
                grid.n(),
                grid.domain_length()
            )));
        }
        SpectralField::from_coeffs(grid, self.coeffs, self.real)
    }
}

pub fn write(path: &Path, field: &SpectralField) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| KseError::io(path, e))?;
    f.write_all(&encode(field)).map_err(|e| KseError::io(path, e))
}

pub fn read(path: &Path) -> Result<RawSnapshot> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| KseError::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn header_layout() {
        let g = build_grid(4, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x, y| x.cos() + y.sin());
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], b"KSEF");
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 16);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 4);
        assert_eq!(bytes[24], 1);
        let back = decode(&bytes).unwrap().into_field().unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(decode(b"KSE").is_err());
        let g = build_grid(4, 1.0).unwrap();
        let mut bytes = encode(&SpectralField::zeros(&g, true));
        bytes[0] = b'X';
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&SpectralField::zeros(&g, true));
        bytes.pop();
        assert!(decode(&bytes).is_err());
    }
}
