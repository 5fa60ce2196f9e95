//! Binary grid snapshots.
//!
//! Layout, little-endian: 16-byte magic `PHSPGRID01` padded with NULs,
//! `u32` rows, `u32` columns, `u8` axis tag (0 `(z,p)`, 1 `(z,r)`,
//! 2 `(x,y)`), `u8` complex flag, two pad bytes, `f64 z_min`,
//! `f64 length_z`, then row-major `f64` values with real and imaginary
//! parts interleaved when complex. A quantum wave function is stored as
//! an `(x,y)` file with a single column.

use std::path::Path;

use phasespace_core::states::{ClassicalWaveFunction, QuantumWaveFunction};
use phasespace_core::{Axes, Complex64, Field2D, Grid};

use crate::error::RunError;

pub const MAGIC: [u8; 16] = *b"PHSPGRID01\0\0\0\0\0\0";
const HEADER: usize = 16 + 4 + 4 + 4 + 8 + 8;

/// Decoded contents of a grid file.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub rows: usize,
    pub cols: usize,
    pub axes: Axes,
    pub complex: bool,
    pub z_min: f64,
    pub length_z: f64,
    pub values: Vec<Complex64>,
}

impl GridFile {
    pub fn from_field(f: &Field2D, complex: bool) -> Self {
        let (rows, cols) = f.shape();
        let g = f.grid();
        Self { rows, cols, axes: f.axes(), complex, z_min: g.x_min(), length_z: g.length(), values: f.values().to_vec() }
    }

    pub fn from_quantum(psi: &QuantumWaveFunction) -> Self {
        let g = psi.grid();
        Self {
            rows: g.n_x(),
            cols: 1,
            axes: Axes::XY,
            complex: true,
            z_min: g.x_min(),
            length_z: g.length(),
            values: psi.values().to_vec(),
        }
    }

    /// Lattice implied by the header.
    pub fn grid(&self) -> Result<Grid, String> {
        let n_x = match self.axes {
            Axes::XY => self.rows,
            Axes::ZP | Axes::ZR => self.rows / 2,
        };
        Grid::new(n_x, self.z_min, self.length_z).map_err(|e| e.to_string())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let per = if self.complex { 2 } else { 1 };
        let mut out = Vec::with_capacity(HEADER + 8 * per * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.push(self.axes.tag());
        out.push(self.complex as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.z_min.to_le_bytes());
        out.extend_from_slice(&self.length_z.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            if self.complex {
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        if bytes.len() < HEADER {
            return Err(format!("{} bytes is shorter than the {HEADER}-byte header", bytes.len()));
        }
        if bytes[..16] != MAGIC {
            return Err("bad magic, not a grid file".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (rows, cols) = (u32_at(16), u32_at(20));
        let axes = Axes::from_tag(bytes[24]).ok_or_else(|| format!("unknown axis tag {}", bytes[24]))?;
        let complex = match bytes[25] {
            0 => false,
            1 => true,
            t => return Err(format!("complex flag must be 0 or 1, got {t}")),
        };
        let (z_min, length_z) = (f64_at(28), f64_at(36));
        let per = if complex { 2 } else { 1 };
        let expected = HEADER + 8 * per * rows * cols;
        if bytes.len() != expected {
            return Err(format!("{rows}x{cols} payload needs {expected} bytes, file has {}", bytes.len()));
        }
        let values = (0..rows * cols)
            .map(|k| {
                let o = HEADER + 8 * per * k;
                Complex64::new(f64_at(o), if complex { f64_at(o + 8) } else { 0.0 })
            })
            .collect();
        Ok(Self { rows, cols, axes, complex, z_min, length_z, values })
    }

    /// Two-dimensional field on the lattice implied by the header.
    pub fn to_field(&self) -> Result<Field2D, String> {
        let g = self.grid()?;
        if Field2D::shape_of(&g, self.axes) != (self.rows, self.cols) {
            return Err(format!("shape {}x{} does not match a {:?} field", self.rows, self.cols, self.axes));
        }
        Field2D::new(g, self.axes, self.values.clone()).map_err(|e| e.to_string())
    }
}

pub fn write(path: &Path, file: &GridFile) -> Result<(), RunError> {
    std::fs::write(path, file.to_bytes()).map_err(|e| RunError::io(path, e))
}

pub fn read(path: &Path) -> Result<GridFile, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    GridFile::from_bytes(&bytes).map_err(|message| RunError::Format { path: path.into(), message })
}

/// Reads a real `(z,p)` classical wave function.
pub fn read_classical(path: &Path) -> Result<ClassicalWaveFunction, RunError> {
    let f = read(path)?;
    let fail = |message: String| RunError::Format { path: path.into(), message };
    if f.axes != Axes::ZP {
        return Err(fail(format!("expected a (z,p) field, found {:?}", f.axes)));
    }
    let field = f.to_field().map_err(fail)?;
    Ok(ClassicalWaveFunction::from_field(&field)?.normalized()?)
}

/// Reads a quantum wave function stored as a one-column complex `(x,y)` file.
pub fn read_quantum(path: &Path) -> Result<QuantumWaveFunction, RunError> {
    let f = read(path)?;
    let fail = |message: String| RunError::Format { path: path.into(), message };
    if f.axes != Axes::XY || f.cols != 1 {
        return Err(fail(format!("expected a one-column (x,y) file, found {:?} with {} columns", f.axes, f.cols)));
    }
    let g = f.grid().map_err(fail)?;
    Ok(QuantumWaveFunction::new(g, f.values)?)
}
