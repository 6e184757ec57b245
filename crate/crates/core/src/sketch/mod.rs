//! Sketch augmentation: skeletonize a sketch, split it into patches, refit
//! each patch's principal curve as a cubic Bezier, jitter the control points
//! by an amplitude that grows with sketch size, and draw it again.

mod augment;
mod bezier;
mod partition;
mod perturb;
mod principal;
mod rasterize;
mod skeleton;

pub use augment::{augment, fit_sketch, AugmentConfig, Augmented, FitRecord, PatchCurve, SketchVector};
pub use bezier::{chord_length_params, fit_cubic_bezier, fit_cubic_bezier_with_params, BezierFit, CubicBezier, Point};
pub use partition::{grid_side, partition, Patch};
pub use perturb::{compute_delta, perturb_curve, perturb_curve_with};
pub use principal::{principal_curve, PixelPath};
pub use rasterize::{rasterize_curves, sample_count};
pub use skeleton::{has_full_block, skeletonize};
