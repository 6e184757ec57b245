//! Shared 2-D raster types and the low-level operations built on them.
//!
//! Coordinates are `(row, col)` with `row` growing downward. All rasters are
//! stored row-major.

mod distance;
mod io;
mod pool;
mod topology;

pub use distance::{chamfer_distance, directed_distances, hausdorff_distance};
pub use io::{load_raster, read_pf32, read_pgm, save_mask, save_prob, save_raster, write_pf32, write_pgm, Raster};
pub use pool::{maxpool, maxpool_slice, maxpool_with_argmax, PoolSource};
pub use topology::{connected_components, euler_number, is_simple, Connectivity, LabelMap};

use crate::error::{Error, Result};

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::param(format!("raster dimensions must be positive, got {height}x{width}")));
    }
    if height.checked_mul(width) != Some(len) {
        return Err(Error::shape(format!("{height}x{width} raster needs {} values, got {len}", height * width)));
    }
    Ok(())
}

/// Binary raster (object masks, sketches, skeletons).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        Ok(Self { height, width, data })
    }

    /// All-background mask.
    pub fn empty(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![false; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    /// Out-of-frame coordinates read as background.
    pub fn get_signed(&self, row: i64, col: i64) -> bool {
        if row < 0 || col < 0 || row >= self.height as i64 || col >= self.width as i64 {
            false
        } else {
            self.data[row as usize * self.width + col as usize]
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    /// Foreground pixels in scan order.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }

    /// Inclusive row range `(min, max)` covered by the foreground.
    pub fn row_extent(&self) -> Option<(usize, usize)> {
        let first = self.data.iter().position(|&v| v)?;
        let last = self.data.iter().rposition(|&v| v)?;
        Some((first / self.width, last / self.width))
    }

    pub fn complement(&self) -> Self {
        Self { height: self.height, width: self.width, data: self.data.iter().map(|v| !v).collect() }
    }

    /// Copy of `self` placed at `(row, col)` inside a larger background canvas.
    pub fn embed(&self, height: usize, width: usize, row: usize, col: usize) -> Result<Self> {
        if row + self.height > height || col + self.width > width {
            return Err(Error::param("embedded mask does not fit in canvas"));
        }
        let mut out = Self::empty(height, width)?;
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(r + row, c + col, self.get(r, c));
            }
        }
        Ok(out)
    }

    pub fn to_prob(&self) -> ProbMap {
        ProbMap {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn same_shape<T: Shaped>(&self, other: &T) -> Result<()> {
        same_shape(self, other)
    }
}

/// Probability raster: every value lies in `[0, 1]`.
///
/// Values are held as `f64`; the PF32 file format stores them as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ProbMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation(format!(
                "probability {} at ({}, {}) outside [0, 1]",
                data[i],
                i / width,
                i % width
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// `1 - p` elementwise.
    pub fn inverted(&self) -> Self {
        Self { height: self.height, width: self.width, data: self.data.iter().map(|v| 1.0 - v).collect() }
    }

    /// Pixels with `p >= threshold` become foreground.
    pub fn threshold(&self, threshold: f64) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| v >= threshold).collect(),
        }
    }
}

/// Unconstrained real raster, used for gradients and intermediate fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        Ok(Self { height, width, data })
    }
}

/// Anything with a raster shape.
pub trait Shaped {
    fn dims(&self) -> (usize, usize);
}

impl Shaped for BinaryMask {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

impl Shaped for ProbMap {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

impl Shaped for ScalarField {
    fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

pub fn same_shape(a: &impl Shaped, b: &impl Shaped) -> Result<()> {
    let (da, db) = (a.dims(), b.dims());
    if da != db {
        return Err(Error::shape(format!("{}x{} vs {}x{}", da.0, da.1, db.0, db.1)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates_length_and_range() {
        assert!(BinaryMask::new(2, 2, vec![false; 3]).is_err());
        assert!(BinaryMask::new(0, 2, vec![]).is_err());
        assert!(matches!(ProbMap::new(1, 2, vec![0.5, 1.5]), Err(Error::Validation(_))));
        assert!(ProbMap::new(1, 2, vec![0.5, f64::NAN]).is_err());
        assert!(ProbMap::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn row_extent_spans_foreground() {
        let m = BinaryMask::from_fn(6, 4, |r, c| (r == 1 && c == 3) || (r == 4 && c == 0)).unwrap();
        assert_eq!(m.row_extent(), Some((1, 4)));
        assert_eq!(BinaryMask::empty(3, 3).unwrap().row_extent(), None);
    }
}
