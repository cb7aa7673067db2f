//! Cell-centered scalar fields on a uniform Cartesian grid, plus the
//! LDF2 on-disk format (magic `LDF2`, version u32 LE, nx u32, ny u32,
//! dx f64, dy f64, values f64 LE row-major). Round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{FvmError, Result};

const MAGIC: &[u8; 4] = b"LDF2";
const VERSION: u32 = 1;

/// Cell-centered values, row-major with index `p = j*nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(FvmError::DegenerateGrid { nx, ny });
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(FvmError::InvalidField(format!(
                "cell spacing must be positive, got dx={dx}, dy={dy}"
            )));
        }
        if values.len() != nx * ny {
            return Err(FvmError::InvalidField(format!(
                "{}x{} grid needs {} values, got {}",
                nx,
                ny,
                nx * ny,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(FvmError::InvalidField("non-finite value".into()));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            values,
        })
    }

    pub fn constant(nx: usize, ny: usize, dx: f64, dy: f64, v: f64) -> Self {
        Self::new(nx, ny, dx, dy, vec![v; nx * ny]).unwrap()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.values[p] = v;
    }

    /// x-coordinate of the cell center, with the domain origin at (0, 0)
    /// unless the caller offsets externally.
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.dx == other.dx && self.dy == other.dy
    }

    pub fn require_positive(&self) -> Result<()> {
        for (cell, &v) in self.values.iter().enumerate() {
            if !(v > 0.0) {
                return Err(FvmError::NonPositiveConductivity { cell, value: v });
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            dx: self.dx,
            dy: self.dy,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn write_ldf2(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.nx as u32).to_le_bytes())?;
        w.write_all(&(self.ny as u32).to_le_bytes())?;
        w.write_all(&self.dx.to_le_bytes())?;
        w.write_all(&self.dy.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_ldf2(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(FvmError::BadFieldFile(format!(
                "bad magic in {}",
                path.display()
            )));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(FvmError::BadFieldFile(format!(
                "unsupported version {version}"
            )));
        }
        r.read_exact(&mut b4)?;
        let nx = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let ny = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let dx = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let dy = f64::from_le_bytes(b8);
        let mut values = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::new(nx, ny, dx, dy, values)
    }
}

/// The boundary configuration of the flow problem: Dirichlet head on the
/// left and right faces, no-flux on top and bottom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub left_dirichlet: f64,
    pub right_dirichlet: f64,
}

impl BoundaryConditions {
    pub fn new(left_dirichlet: f64, right_dirichlet: f64) -> Self {
        Self {
            left_dirichlet,
            right_dirichlet,
        }
    }
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        // unit head drop from left to right
        Self::new(1.0, 0.0)
    }
}
