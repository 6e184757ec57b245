//! End-to-end sketch augmentation and the vector sketch format.

use serde::{Deserialize, Serialize};

use super::bezier::{fit_cubic_bezier, CubicBezier, Point};
use super::partition::{grid_side, partition};
use super::perturb::{compute_delta, perturb_curve_with};
use super::principal::principal_curve;
use super::rasterize::rasterize_curves;
use super::skeleton::skeletonize;
use crate::error::{Error, Result};
use crate::raster::BinaryMask;
use crate::rng::Stream;

/// Parameters of the augmentation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Patch count; must be a perfect square.
    pub n: usize,
    /// Rows of sketch per displacement unit (`C`).
    #[serde(rename = "C")]
    pub rows_per_unit: usize,
    /// Displacement added per unit, in pixels (`K`).
    #[serde(rename = "K")]
    pub increment: f64,
    /// Principal curves with fewer pixels are dropped.
    pub min_pixels: usize,
    /// Stroke width of the re-rasterized sketch.
    pub thickness: usize,
    pub seed: u64,
    /// Also displace the curve endpoints.
    #[serde(default)]
    pub perturb_endpoints: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { n: 64, rows_per_unit: 64, increment: 8.0, min_pixels: 8, thickness: 1, seed: 0, perturb_endpoints: false }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        grid_side(self.n)?;
        if self.rows_per_unit == 0 {
            return Err(Error::param("C must be at least 1"));
        }
        if !(self.increment >= 0.0 && self.increment.is_finite()) {
            return Err(Error::param("K must be finite and non-negative"));
        }
        if self.min_pixels < 2 {
            return Err(Error::param("min_pixels must be at least 2"));
        }
        if self.thickness == 0 {
            return Err(Error::param("thickness must be at least 1"));
        }
        Ok(())
    }
}

/// One fitted curve tagged with the patch it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchCurve {
    pub patch: usize,
    pub curve: CubicBezier,
}

/// Vector form of a sketch: one cubic per contributing patch.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchVector {
    pub height: usize,
    pub width: usize,
    pub curves: Vec<PatchCurve>,
}

fn fmt_real(v: f64) -> String {
    // 17 significant digits: one before the point, sixteen after.
    format!("{v:.16e}")
}

fn fmt_point(p: Point) -> String {
    format!("[{},{}]", fmt_real(p.x), fmt_real(p.y))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveJson {
    patch: usize,
    p0: [f64; 2],
    p1: [f64; 2],
    p2: [f64; 2],
    p3: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SketchJson {
    height: usize,
    width: usize,
    curves: Vec<CurveJson>,
}

impl SketchVector {
    pub fn rasterize(&self, thickness: usize) -> Result<BinaryMask> {
        rasterize_curves(self.curves.iter().map(|c| &c.curve), self.height, self.width, thickness)
    }

    /// Serialize with every real written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let curves: Vec<String> = self
            .curves
            .iter()
            .map(|c| {
                format!(
                    "{{\"patch\":{},\"p0\":{},\"p1\":{},\"p2\":{},\"p3\":{}}}",
                    c.patch,
                    fmt_point(c.curve.p0),
                    fmt_point(c.curve.p1),
                    fmt_point(c.curve.p2),
                    fmt_point(c.curve.p3)
                )
            })
            .collect();
        format!("{{\"height\":{},\"width\":{},\"curves\":[{}]}}", self.height, self.width, curves.join(","))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SketchJson = serde_json::from_str(text).map_err(|e| Error::format(format!("sketch JSON: {e}")))?;
        if raw.height == 0 || raw.width == 0 {
            return Err(Error::validation("sketch dimensions must be positive"));
        }
        let pt = |p: [f64; 2]| Point::new(p[0], p[1]);
        let curves = raw
            .curves
            .into_iter()
            .map(|c| PatchCurve { patch: c.patch, curve: CubicBezier::new(pt(c.p0), pt(c.p1), pt(c.p2), pt(c.p3)) })
            .collect();
        Ok(Self { height: raw.height, width: raw.width, curves })
    }
}

/// Per-patch diagnostics from the fitting stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRecord {
    pub patch: usize,
    pub path_len: usize,
    pub rms: f64,
    pub degenerate: bool,
}

/// Everything [`augment`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub raster: BinaryMask,
    pub vector: SketchVector,
    /// Displacement amplitude applied to this sketch.
    pub delta: f64,
    /// Rows spanned by the input sketch's bounding box.
    pub rows: usize,
    pub fits: Vec<FitRecord>,
    /// No patch produced a fit-eligible curve; the raster is empty.
    pub no_curves: bool,
}

/// Fit the unperturbed curves of a sketch (skeletonize, partition, principal
/// curve, least squares).
pub fn fit_sketch(sketch: &BinaryMask, config: &AugmentConfig) -> Result<(SketchVector, Vec<FitRecord>)> {
    config.validate()?;
    let skeleton = skeletonize(sketch);
    let mut curves = Vec::new();
    let mut fits = Vec::new();
    for patch in partition(&skeleton, config.n)? {
        let Some(path) = principal_curve(&patch.pixels, config.min_pixels) else {
            continue;
        };
        let fit = fit_cubic_bezier(&path.points())?;
        fits.push(FitRecord { patch: patch.index, path_len: path.len(), rms: fit.rms, degenerate: fit.degenerate });
        curves.push(PatchCurve { patch: patch.index, curve: fit.curve });
    }
    Ok((SketchVector { height: sketch.height(), width: sketch.width(), curves }, fits))
}

/// Refit a sketch as per-patch cubics, perturb their control points by the
/// size-scaled amplitude and draw the result.
///
/// Each patch draws from its own random stream (`seed`, patch index), so the
/// output does not depend on processing order.
pub fn augment(sketch: &BinaryMask, config: &AugmentConfig) -> Result<Augmented> {
    let (mut vector, fits) = fit_sketch(sketch, config)?;
    let rows = sketch.row_extent().map_or(0, |(lo, hi)| hi - lo + 1);
    let delta = compute_delta(rows, config.rows_per_unit, config.increment)?;
    for pc in vector.curves.iter_mut() {
        let mut rng = Stream::split(config.seed, pc.patch as u64);
        pc.curve = perturb_curve_with(&pc.curve, delta, &mut rng, config.perturb_endpoints);
    }
    let raster = vector.rasterize(config.thickness)?;
    let no_curves = vector.curves.is_empty();
    Ok(Augmented { raster, vector, delta, rows, fits, no_curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_contour(size: usize, lo: usize, hi: usize) -> BinaryMask {
        BinaryMask::from_fn(size, size, |r, c| {
            let inside = (lo..=hi).contains(&r) && (lo..=hi).contains(&c);
            inside && (r == lo || r == hi || c == lo || c == hi)
        })
        .unwrap()
    }

    #[test]
    fn empty_sketch_yields_warning() {
        let out = augment(&BinaryMask::empty(32, 32).unwrap(), &AugmentConfig::default()).unwrap();
        assert!(out.no_curves);
        assert!(out.raster.is_empty());
        assert_eq!(out.delta, 0.0);
    }

    #[test]
    fn same_seed_same_output() {
        let s = square_contour(128, 20, 100);
        let cfg = AugmentConfig { seed: 42, ..Default::default() };
        let a = augment(&s, &cfg).unwrap();
        let b = augment(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vector.to_json(), b.vector.to_json());
        assert_eq!(a.delta, 8.0);
        let c = augment(&s, &AugmentConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.vector, c.vector);
    }

    #[test]
    fn zero_increment_returns_plain_fits() {
        let s = square_contour(64, 16, 47);
        let cfg = AugmentConfig { increment: 0.0, ..Default::default() };
        let (fitted, _) = fit_sketch(&s, &cfg).unwrap();
        let out = augment(&s, &cfg).unwrap();
        assert_eq!(out.vector, fitted);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = square_contour(128, 10, 90);
        let out = augment(&s, &AugmentConfig { seed: 5, ..Default::default() }).unwrap();
        let text = out.vector.to_json();
        assert!(text.starts_with("{\"height\":128,\"width\":128,\"curves\":[{\"patch\":"));
        assert_eq!(SketchVector::from_json(&text).unwrap(), out.vector);
        assert!(SketchVector::from_json("{\"height\":1}").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig { n: 10, ..Default::default() }.validate().is_err());
        assert!(AugmentConfig { min_pixels: 1, ..Default::default() }.validate().is_err());
        assert!(AugmentConfig { rows_per_unit: 0, ..Default::default() }.validate().is_err());
        let json = serde_json::to_string(&AugmentConfig::default()).unwrap();
        assert!(json.contains("\"C\":64") && json.contains("\"K\":8.0"));
    }
}
