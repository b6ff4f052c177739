//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | content                         |
//! |-------|---------------------------------|
//! | 8     | magic `DLSNAP01`                |
//! | 8     | `u64` points per dimension `n`  |
//! | 8     | `f64` box length `L`            |
//! | 8     | `f64` time                      |
//! | 4     | `u32` name length in bytes      |
//! | var   | UTF-8 field name                |
//! | 8 n^3 | `f64` physical values, row-major|

use std::io::{Read, Write};

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DLSNAP01";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub time: f64,
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_field(name: &str, time: f64, field: &SpectralField) -> Self {
        Self {
            name: name.to_owned(),
            time,
            grid: field.grid(),
            values: field.to_physical(),
        }
    }

    pub fn to_field(&self) -> Result<SpectralField> {
        SpectralField::from_physical(self.grid, &self.values)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.box_length().to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        let name = self.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let box_length = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        let grid = GridSpec::new(n, box_length)?;
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let len = u32::from_le_bytes(b4) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let mut raw = vec![0u8; grid.physical_len() * 8];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self {
            name,
            time,
            grid,
            values,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = GridSpec::new(4, 2.5).unwrap();
        let snap = Snapshot {
            name: "rho".into(),
            time: 1.5,
            grid: g,
            values: (0..64).map(|i| i as f64).collect(),
        };
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 8 + 8 + 8 + 4 + 3 + 64 * 8);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2.5);
        assert_eq!(&bytes[36..39], b"rho");
        assert_eq!(f64::from_le_bytes(bytes[39 + 8..39 + 16].try_into().unwrap()), 1.0);
        let back = Snapshot::read_from(&bytes[..]).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = vec![0u8; 64];
        assert!(matches!(Snapshot::read_from(&bytes[..]), Err(Error::Format(_))));
    }
}
