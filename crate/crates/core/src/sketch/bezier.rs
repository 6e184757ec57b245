//! Cubic Bezier curves and their least-squares fit to pixel paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D point in pixel coordinates (`x` right, `y` down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

/// Cubic Bezier: `p0`/`p3` are the endpoints, `p1`/`p2` shape the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

/// Bernstein weights of the cubic basis at `t`.
pub(crate) fn basis(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t]
}

impl CubicBezier {
    pub const fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Self {
        Self { p0, p1, p2, p3 }
    }

    /// Straight segment with inner controls at the thirds.
    pub fn line(p0: Point, p3: Point) -> Self {
        Self::new(p0, p0.lerp(p3, 1.0 / 3.0), p0.lerp(p3, 2.0 / 3.0), p3)
    }

    pub fn controls(&self) -> [Point; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn is_finite(&self) -> bool {
        self.controls().iter().all(|p| p.x.is_finite() && p.y.is_finite())
    }

    /// `f(t) = (1-t)^3 p0 + 3t(1-t)^2 p1 + 3t^2(1-t) p2 + t^3 p3`.
    pub fn eval(&self, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param(format!("curve parameter {t} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> Point {
        let b = basis(t);
        let c = self.controls();
        Point::new(
            b[0] * c[0].x + b[1] * c[1].x + b[2] * c[2].x + b[3] * c[3].x,
            b[0] * c[0].y + b[1] * c[1].y + b[2] * c[2].y + b[3] * c[3].y,
        )
    }

    /// Length of the control polygon `p0 p1 p2 p3`.
    pub fn polygon_length(&self) -> f64 {
        self.p0.distance(self.p1) + self.p1.distance(self.p2) + self.p2.distance(self.p3)
    }

    /// Root-mean-square distance from `points[i]` to `f(params[i])`.
    pub fn rms_residual(&self, points: &[Point], params: &[f64]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let sq: f64 = points
            .iter()
            .zip(params)
            .map(|(v, &t)| {
                let f = self.eval_unchecked(t);
                (v.x - f.x).powi(2) + (v.y - f.y).powi(2)
            })
            .sum();
        (sq / points.len() as f64).sqrt()
    }
}

/// Result of fitting one cubic to an ordered point sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierFit {
    pub curve: CubicBezier,
    /// RMS distance between the samples and the curve at their parameters.
    pub rms: f64,
    /// The normal equations were singular and the straight segment was used.
    pub degenerate: bool,
}

/// Normalised cumulative chord length; all zeros for a zero-length path.
pub fn chord_length_params(points: &[Point]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(points.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in points.windows(2) {
        total += w[0].distance(w[1]);
        acc.push(total);
    }
    if total > 0.0 {
        for v in acc.iter_mut() {
            *v /= total;
        }
    }
    acc
}

/// Least-squares cubic through an ordered path with fixed endpoints and
/// chord-length parameters.
pub fn fit_cubic_bezier(points: &[Point]) -> Result<BezierFit> {
    let params = chord_length_params(points);
    fit_cubic_bezier_with_params(points, &params)
}

/// Least-squares cubic with caller-supplied parameters.
///
/// `p0` and `p3` are pinned to the first and last point; `p1`, `p2` minimise
/// `sum |v_i - f(t_i)|^2` via the 2x2 normal equations, solved per coordinate.
pub fn fit_cubic_bezier_with_params(points: &[Point], params: &[f64]) -> Result<BezierFit> {
    if points.len() < 2 {
        return Err(Error::param(format!("need at least 2 points to fit, got {}", points.len())));
    }
    if params.len() != points.len() {
        return Err(Error::shape("one parameter per point required"));
    }
    let p0 = points[0];
    let p3 = points[points.len() - 1];
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let (mut rx1, mut rx2, mut ry1, mut ry2) = (0.0, 0.0, 0.0, 0.0);
    for (v, &t) in points.iter().zip(params) {
        let [b0, b1, b2, b3] = basis(t);
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        // Residual after removing the fixed endpoint contribution.
        let rx = v.x - b0 * p0.x - b3 * p3.x;
        let ry = v.y - b0 * p0.y - b3 * p3.y;
        rx1 += b1 * rx;
        rx2 += b2 * rx;
        ry1 += b1 * ry;
        ry2 += b2 * ry;
    }
    let det = a11 * a22 - a12 * a12;
    let (curve, degenerate) = if a11 * a22 <= 0.0 || det <= 1e-10 * a11 * a22 {
        (CubicBezier::line(p0, p3), true)
    } else {
        let p1 = Point::new((a22 * rx1 - a12 * rx2) / det, (a22 * ry1 - a12 * ry2) / det);
        let p2 = Point::new((a11 * rx2 - a12 * rx1) / det, (a11 * ry2 - a12 * ry1) / det);
        (CubicBezier::new(p0, p1, p2, p3), false)
    };
    Ok(BezierFit { curve, rms: curve.rms_residual(points, params), degenerate })
}
