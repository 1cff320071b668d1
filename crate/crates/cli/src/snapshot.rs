//! PFLD field snapshots.
//!
//! Little-endian 32-byte header: magic `PFLD` (0..4), u16 version (4..6),
//! u32 nx (6..10), u32 ny (10..14), f64 Lx (14..22), f64 Ly (22..30), u8 bc
//! (30; 0 periodic, 1 dirichlet), u8 ncomp (31). Then `ncomp` blocks of
//! `nx·ny` f64 values, rows of constant y in order.

use std::fs;
use std::path::{Path, PathBuf};

use pflow::{Boundary, Grid2D, ScalarField, VectorField2};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"PFLD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a PFLD file (magic {0:?})")]
    BadMagic([u8; 4]),

    #[error("unsupported PFLD version {0} (expected {VERSION})")]
    UnsupportedVersion(u16),

    #[error("truncated PFLD file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },

    #[error("PFLD shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Grid plus one or more component arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid2D,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn new(grid: Grid2D, components: Vec<Vec<f64>>) -> Result<Self, SnapshotError> {
        if components.is_empty() || components.len() > usize::from(u8::MAX) {
            return Err(SnapshotError::ShapeMismatch(format!(
                "{} components",
                components.len()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.len() != grid.len()) {
            return Err(SnapshotError::ShapeMismatch(format!(
                "component of length {} on a {}x{} grid",
                c.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, components })
    }

    pub fn from_scalar(f: &ScalarField) -> Self {
        Self {
            grid: f.grid,
            components: vec![f.values.clone()],
        }
    }

    pub fn from_vector(w: &VectorField2) -> Self {
        Self {
            grid: w.grid,
            components: vec![w.u.clone(), w.v.clone()],
        }
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn to_scalar(&self) -> Result<ScalarField, SnapshotError> {
        match self.components.as_slice() {
            [c] => Ok(ScalarField {
                grid: self.grid,
                values: c.clone(),
            }),
            _ => Err(SnapshotError::ShapeMismatch(format!(
                "expected 1 component, found {}",
                self.ncomp()
            ))),
        }
    }

    pub fn to_vector(&self) -> Result<VectorField2, SnapshotError> {
        match self.components.as_slice() {
            [u, v] => Ok(VectorField2 {
                grid: self.grid,
                u: u.clone(),
                v: v.clone(),
            }),
            _ => Err(SnapshotError::ShapeMismatch(format!(
                "expected 2 components, found {}",
                self.ncomp()
            ))),
        }
    }

    /// File size implied by the header fields.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 8 * self.ncomp() * self.grid.len()
    }
}

pub fn encode(s: &Snapshot) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.encoded_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(s.grid.nx as u32).to_le_bytes());
    out.extend_from_slice(&(s.grid.ny as u32).to_le_bytes());
    out.extend_from_slice(&s.grid.lx.to_le_bytes());
    out.extend_from_slice(&s.grid.ly.to_le_bytes());
    out.push(match s.grid.bc {
        Boundary::Periodic => 0,
        Boundary::Dirichlet => 1,
    });
    out.push(s.ncomp() as u8);
    for c in &s.components {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(b[at..at + 2].try_into().expect("2 bytes"))
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let actual = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(SnapshotError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::TruncatedFile {
            expected: HEADER_LEN as u64,
            actual,
        });
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let (nx, ny) = (u32_at(bytes, 6) as usize, u32_at(bytes, 10) as usize);
    let (lx, ly) = (f64_at(bytes, 14), f64_at(bytes, 22));
    let bc = match bytes[30] {
        0 => Boundary::Periodic,
        1 => Boundary::Dirichlet,
        b => {
            return Err(SnapshotError::ShapeMismatch(format!(
                "unknown boundary code {b}"
            )))
        }
    };
    let ncomp = usize::from(bytes[31]);
    let grid =
        Grid2D::new(nx, ny, lx, ly, bc).map_err(|e| SnapshotError::ShapeMismatch(e.to_string()))?;
    if ncomp == 0 {
        return Err(SnapshotError::ShapeMismatch("zero components".into()));
    }
    let n = nx * ny;
    let expected = (HEADER_LEN + 8 * ncomp * n) as u64;
    if actual < expected {
        return Err(SnapshotError::TruncatedFile { expected, actual });
    }
    if actual > expected {
        return Err(SnapshotError::ShapeMismatch(format!(
            "{} trailing bytes after the payload",
            actual - expected
        )));
    }
    let components = (0..ncomp)
        .map(|c| {
            let base = HEADER_LEN + 8 * c * n;
            (0..n).map(|k| f64_at(bytes, base + 8 * k)).collect()
        })
        .collect();
    Ok(Snapshot { grid, components })
}

pub fn write_snapshot(s: &Snapshot, path: &Path) -> Result<(), SnapshotError> {
    fs::write(path, encode(s)).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
