//! Grid partition of a skeleton into `g x g` rectangular patches.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// One grid cell and the skeleton pixels that fall in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    /// Row-major index in the grid, `0..n`.
    pub index: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    /// `(row, col)` pixels in scan order.
    pub pixels: Vec<(usize, usize)>,
}

/// Side of the patch grid for a perfect-square patch count.
pub fn grid_side(n: usize) -> Result<usize> {
    let g = (n as f64).sqrt().round() as usize;
    if n == 0 || g * g != n {
        return Err(Error::param(format!("patch count {n} is not a positive perfect square")));
    }
    Ok(g)
}

fn bounds(len: usize, g: usize, i: usize) -> Range<usize> {
    let base = len / g;
    let start = i * base;
    let end = if i + 1 == g { len } else { start + base };
    start..end
}

fn cell(coord: usize, len: usize, g: usize) -> usize {
    let base = len / g;
    if base == 0 {
        g - 1
    } else {
        (coord / base).min(g - 1)
    }
}

/// Split the frame into a `sqrt(n) x sqrt(n)` grid and bucket every skeleton
/// pixel into its tile. The last row and column of tiles absorb the remainder.
pub fn partition(skeleton: &BinaryMask, n: usize) -> Result<Vec<Patch>> {
    let g = grid_side(n)?;
    let (h, w) = (skeleton.height(), skeleton.width());
    let mut patches: Vec<Patch> = (0..n)
        .map(|index| Patch { index, rows: bounds(h, g, index / g), cols: bounds(w, g, index % g), pixels: Vec::new() })
        .collect();
    for (r, c) in skeleton.pixels() {
        patches[cell(r, h, g) * g + cell(c, w, g)].pixels.push((r, c));
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_four_tiles_of_eight() {
        let m = BinaryMask::from_fn(64, 64, |r, c| r == c).unwrap();
        let p = partition(&m, 64).unwrap();
        assert_eq!(p.len(), 64);
        for t in &p {
            assert_eq!(t.rows.len(), 8);
            assert_eq!(t.cols.len(), 8);
        }
        assert_eq!(p[9].rows, 8..16);
        assert_eq!(p[9].pixels.len(), 8);
    }

    #[test]
    fn remainder_goes_to_last_tile() {
        let m = BinaryMask::from_fn(10, 10, |r, c| r == 9 && c == 9).unwrap();
        let p = partition(&m, 9).unwrap();
        let sizes: Vec<usize> = (0..3).map(|i| p[i].cols.len()).collect();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(p[8].pixels, vec![(9, 9)]);
    }

    #[test]
    fn single_patch_takes_everything() {
        let m = BinaryMask::from_fn(7, 5, |r, c| (r + c) % 3 == 0).unwrap();
        let p = partition(&m, 1).unwrap();
        assert_eq!(p[0].pixels, m.pixels());
    }

    #[test]
    fn non_square_count_rejected() {
        let m = BinaryMask::empty(4, 4).unwrap();
        assert!(matches!(partition(&m, 8), Err(Error::Parameter(_))));
        assert!(partition(&m, 0).is_err());
    }
}
