//! Soft boundary extraction and the boundary F1 score.

use serde::Serialize;

use crate::error::Result;
use crate::raster::{maxpool_slice, same_shape, BinaryMask, ProbMap};

/// `maxpool(1 - m, theta1) - (1 - m)` on a raw buffer. Out-of-frame pixels
/// count as background, so the inverted map is padded with 1.
pub(crate) fn boundary_slice(data: &[f64], height: usize, width: usize, theta1: usize) -> Result<Vec<f64>> {
    let inv: Vec<f64> = data.iter().map(|v| 1.0 - v).collect();
    let pooled = maxpool_slice(&inv, height, width, theta1, 1.0)?;
    Ok(pooled.iter().zip(&inv).map(|(p, u)| (p - u).clamp(0.0, 1.0)).collect())
}

/// Soft boundary map of a probability map.
pub fn extract_boundary(map: &ProbMap, theta1: usize) -> Result<ProbMap> {
    let b = boundary_slice(map.data(), map.height(), map.width(), theta1)?;
    ProbMap::new(map.height(), map.width(), b)
}

/// Dilate a boundary map by a `theta2` window (zero padding).
pub fn extend_boundary(boundary: &ProbMap, theta2: usize) -> Result<ProbMap> {
    let e = maxpool_slice(boundary.data(), boundary.height(), boundary.width(), theta2, 0.0)?;
    ProbMap::new(boundary.height(), boundary.width(), e)
}

/// Boundary precision, recall and F1 of a soft prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub bf1: f64,
    /// `1 - bf1`.
    pub loss: f64,
    /// Precision and recall are both zero; `bf1` is set to 0 by convention.
    pub degenerate: bool,
}

/// Intermediate sums shared by the score and its gradient.
pub(crate) struct BoundaryParts {
    pub b_pd: Vec<f64>,
    pub b_gt: Vec<f64>,
    pub ext_gt: Vec<f64>,
    pub p_num: f64,
    pub p_den: f64,
    pub r_num: f64,
    pub r_den: f64,
}

impl BoundaryParts {
    pub(crate) fn compute(pred: &ProbMap, gt: &BinaryMask, theta1: usize, theta2: usize) -> Result<Self> {
        same_shape(pred, gt)?;
        let (h, w) = (pred.height(), pred.width());
        let gt = gt.to_prob();
        let b_pd = boundary_slice(pred.data(), h, w, theta1)?;
        let b_gt = boundary_slice(gt.data(), h, w, theta1)?;
        let ext_pd = maxpool_slice(&b_pd, h, w, theta2, 0.0)?;
        let ext_gt = maxpool_slice(&b_gt, h, w, theta2, 0.0)?;
        let (mut p_num, mut p_den, mut r_num, mut r_den) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..h * w {
            p_num += b_pd[i] * ext_gt[i];
            p_den += b_pd[i];
            r_num += b_gt[i] * ext_pd[i];
            r_den += b_gt[i];
        }
        Ok(Self { b_pd, b_gt, ext_gt, p_num, p_den, r_num, r_den })
    }

    pub(crate) fn precision(&self) -> f64 {
        if self.p_den == 0.0 {
            0.0
        } else {
            self.p_num / self.p_den
        }
    }

    pub(crate) fn recall(&self) -> f64 {
        if self.r_den == 0.0 {
            0.0
        } else {
            self.r_num / self.r_den
        }
    }

    pub(crate) fn score(&self) -> BoundaryScore {
        let (precision, recall) = (self.precision(), self.recall());
        let degenerate = precision + recall == 0.0;
        let bf1 = if degenerate { 0.0 } else { (2.0 * precision * recall / (precision + recall)).clamp(0.0, 1.0) };
        BoundaryScore { precision, recall, bf1, loss: 1.0 - bf1, degenerate }
    }
}

/// Boundary F1 between a soft prediction and a binary ground truth.
///
/// A zero denominator makes that ratio 0; `P + R = 0` gives `bf1 = 0`,
/// `loss = 1` and sets `degenerate`.
pub fn boundary_f1(pred: &ProbMap, gt: &BinaryMask, theta1: usize, theta2: usize) -> Result<BoundaryScore> {
    Ok(BoundaryParts::compute(pred, gt, theta1, theta2)?.score())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(n: usize, f: impl FnMut(usize, usize) -> bool) -> BinaryMask {
        BinaryMask::from_fn(n, n, f).unwrap()
    }

    #[test]
    fn single_pixel_boundary_is_the_pixel() {
        let m = mask(5, |r, c| r == 2 && c == 2).to_prob();
        assert_eq!(extract_boundary(&m, 3).unwrap(), m);
    }

    #[test]
    fn filled_square_gives_ring() {
        let sq = mask(5, |r, c| (1..=3).contains(&r) && (1..=3).contains(&c));
        let ring = mask(5, |r, c| sq.get(r, c) && !(r == 2 && c == 2));
        assert_eq!(extract_boundary(&sq.to_prob(), 3).unwrap(), ring.to_prob());
    }

    #[test]
    fn full_frame_gives_frame_ring() {
        let full = ProbMap::filled(6, 7, 1.0).unwrap();
        let b = extract_boundary(&full, 3).unwrap();
        for r in 0..6 {
            for c in 0..7 {
                let want = r == 0 || r == 5 || c == 0 || c == 6;
                assert_eq!(b.get(r, c), if want { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn identical_inputs_score_one() {
        let gt = mask(9, |r, c| (2..7).contains(&r) && (3..8).contains(&c));
        let s = boundary_f1(&gt.to_prob(), &gt, 3, 3).unwrap();
        assert_eq!((s.precision, s.recall, s.bf1, s.loss), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn far_apart_pixels_score_zero() {
        let gt = mask(9, |r, c| r == 4 && c == 4);
        // Five 4-steps from the centre; Chebyshev gap 4 exceeds both radii.
        let pd = mask(9, |r, c| r == 0 && c == 3);
        let s = boundary_f1(&pd.to_prob(), &gt, 3, 3).unwrap();
        assert_eq!((s.precision, s.recall, s.loss), (0.0, 0.0, 1.0));
        assert!(s.degenerate);
    }

    #[test]
    fn empty_pair_is_degenerate() {
        let e = BinaryMask::empty(4, 4).unwrap();
        let s = boundary_f1(&e.to_prob(), &e, 3, 3).unwrap();
        assert_eq!(s.loss, 1.0);
        assert!(s.degenerate);
    }
}
