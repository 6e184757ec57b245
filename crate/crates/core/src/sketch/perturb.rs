//! Size-scaled random displacement of control points.

use super::bezier::{CubicBezier, Point};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Displacement amplitude `floor(row / C) * K`.
///
/// `row` is the number of raster rows the sketch spans, `rows_per_unit` is
/// `C` and `increment` is `K` (pixels).
pub fn compute_delta(row: usize, rows_per_unit: usize, increment: f64) -> Result<f64> {
    if rows_per_unit == 0 {
        return Err(Error::param("rows per unit (C) must be at least 1"));
    }
    if !(increment >= 0.0 && increment.is_finite()) {
        return Err(Error::param(format!("displacement increment (K) must be finite and >= 0, got {increment}")));
    }
    Ok((row / rows_per_unit) as f64 * increment)
}

fn jitter(p: Point, delta: f64, rng: &mut Stream) -> Point {
    let dx = delta * (2.0 * rng.unit() - 1.0);
    let dy = delta * (2.0 * rng.unit() - 1.0);
    Point::new(p.x + dx, p.y + dy)
}

/// Displace `p1` and `p2` by independent uniform offsets in `[-delta, delta]`
/// per coordinate. Endpoints stay fixed.
pub fn perturb_curve(curve: &CubicBezier, delta: f64, rng: &mut Stream) -> CubicBezier {
    perturb_curve_with(curve, delta, rng, false)
}

/// As [`perturb_curve`], optionally moving the endpoints as well. Endpoint
/// draws come after the inner ones, so enabling them does not change `p1`/`p2`.
pub fn perturb_curve_with(curve: &CubicBezier, delta: f64, rng: &mut Stream, endpoints: bool) -> CubicBezier {
    let mut out = *curve;
    out.p1 = jitter(curve.p1, delta, rng);
    out.p2 = jitter(curve.p2, delta, rng);
    if endpoints {
        out.p0 = jitter(curve.p0, delta, rng);
        out.p3 = jitter(curve.p3, delta, rng);
    }
    out
}
