//! Drawing curves back onto a pixel grid.

use super::bezier::CubicBezier;
use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// Samples used to draw a curve: `max(2, ceil(4 * control-polygon length))`.
pub fn sample_count(curve: &CubicBezier) -> usize {
    let n = (4.0 * curve.polygon_length()).ceil();
    if n.is_finite() {
        (n as usize).max(2)
    } else {
        2
    }
}

struct Canvas {
    mask: BinaryMask,
    thickness: usize,
}

impl Canvas {
    fn stamp(&mut self, row: i64, col: i64) {
        let lo = -((self.thickness as i64 - 1) / 2);
        let hi = lo + self.thickness as i64;
        for r in row + lo..row + hi {
            for c in col + lo..col + hi {
                if r >= 0 && c >= 0 && (r as usize) < self.mask.height() && (c as usize) < self.mask.width() {
                    self.mask.set(r as usize, c as usize, true);
                }
            }
        }
    }

    /// Bresenham segment between two pixel centres, endpoints included.
    fn line(&mut self, (r0, c0): (i64, i64), (r1, c1): (i64, i64)) {
        let dc = (c1 - c0).abs();
        let dr = -(r1 - r0).abs();
        let sc = if c0 < c1 { 1 } else { -1 };
        let sr = if r0 < r1 { 1 } else { -1 };
        let (mut r, mut c) = (r0, c0);
        let mut err = dc + dr;
        loop {
            self.stamp(r, c);
            if r == r1 && c == c1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dr {
                err += dr;
                c += sc;
            }
            if e2 <= dc {
                err += dc;
                r += sr;
            }
        }
    }
}

fn to_pixel(x: f64, y: f64) -> (i64, i64) {
    // Saturating casts keep wildly perturbed points off-canvas instead of UB.
    (y.round() as i64, x.round() as i64)
}

/// Draw every curve with the given stroke width, clipped to the canvas.
///
/// Each curve is sampled uniformly in `t`; consecutive samples are joined by
/// integer line segments and each pixel is stamped with a `thickness`-wide
/// square.
pub fn rasterize_curves<'a>(
    curves: impl IntoIterator<Item = &'a CubicBezier>,
    height: usize,
    width: usize,
    thickness: usize,
) -> Result<BinaryMask> {
    if thickness == 0 {
        return Err(Error::param("stroke thickness must be at least 1"));
    }
    let mut canvas = Canvas { mask: BinaryMask::empty(height, width)?, thickness };
    for curve in curves {
        if !curve.is_finite() {
            return Err(Error::param("cannot rasterize a curve with non-finite controls"));
        }
        let m = sample_count(curve);
        let mut prev: Option<(i64, i64)> = None;
        for j in 0..m {
            let p = curve.eval_unchecked(j as f64 / (m - 1) as f64);
            let px = to_pixel(p.x, p.y);
            match prev {
                Some(q) if q == px => {}
                Some(q) => canvas.line(q, px),
                None => canvas.stamp(px.0, px.1),
            }
            prev = Some(px);
        }
    }
    Ok(canvas.mask)
}
