//! Deterministic synthetic camouflage samples: a value-noise texture, a blob
//! object whose texture is nudged by a small contrast, and a sketch derived
//! from the object's boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::extract_boundary;
use crate::raster::{connected_components, BinaryMask, Connectivity, ProbMap};
use crate::rng::Stream;
use crate::sketch::{augment, AugmentConfig, Augmented};

/// Stream ids; each part of a sample draws from its own stream.
const TEXTURE_STREAM: u64 = 0;
const SHAPE_STREAM: u64 = 1;
const SKETCH_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub blob_count: usize,
    /// Contrast between object and background, in `[0, 0.5]`.
    pub delta: f64,
    /// Lattice spacing of the value noise, in pixels.
    pub noise_scale: f64,
    pub seed: u64,
    /// Sketch augmentation; its `seed` is replaced by one derived from `seed`.
    pub sketch: AugmentConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { height: 128, width: 128, blob_count: 3, delta: 0.1, noise_scale: 8.0, seed: 0, sketch: AugmentConfig::default() }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 32 || self.width < 32 {
            return Err(Error::param(format!("image must be at least 32x32, got {}x{}", self.height, self.width)));
        }
        if self.blob_count == 0 {
            return Err(Error::param("blob_count must be at least 1"));
        }
        if !(0.0..=0.5).contains(&self.delta) {
            return Err(Error::param(format!("delta must lie in [0, 0.5], got {}", self.delta)));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::param("noise_scale must be positive and finite"));
        }
        self.sketch.validate()
    }
}

/// One generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: ProbMap,
    pub mask: BinaryMask,
    pub sketch: BinaryMask,
    /// Full augmentation output behind `sketch`.
    pub augmented: Augmented,
}

/// Bilinearly interpolated lattice noise in `[0, 1)`.
pub fn value_noise(height: usize, width: usize, scale: f64, rng: &mut Stream) -> Vec<f64> {
    let gh = (height as f64 / scale).ceil() as usize + 2;
    let gw = (width as f64 / scale).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..gh * gw).map(|_| rng.unit()).collect();
    let mut out = Vec::with_capacity(height * width);
    for y in 0..height {
        let fy = y as f64 / scale;
        let (iy, ty) = (fy.floor() as usize, fy - fy.floor());
        for x in 0..width {
            let fx = x as f64 / scale;
            let (ix, tx) = (fx.floor() as usize, fx - fx.floor());
            let at = |r: usize, c: usize| lattice[r * gw + c];
            let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
            let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

fn majority_filter(mask: &BinaryMask) -> BinaryMask {
    BinaryMask::from_fn(mask.height(), mask.width(), |r, c| {
        let mut n = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                n += usize::from(mask.get_signed(r as i64 + dr, c as i64 + dc));
            }
        }
        n >= 5
    })
    .expect("dimensions already validated")
}

fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let labels = connected_components(mask, Connectivity::Eight);
    let sizes = labels.sizes();
    let Some(best) = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))) else {
        return mask.clone();
    };
    let keep = best as u32 + 1;
    BinaryMask::from_fn(mask.height(), mask.width(), |r, c| labels.get(r, c) == keep).expect("same dimensions")
}

/// Union of chained disks, majority-smoothed, largest component kept.
///
/// Disk centres stay in the central half of the frame and radii are at most
/// 26% of the short side, so the frame corners are always background.
pub fn gen_mask(height: usize, width: usize, blob_count: usize, rng: &mut Stream) -> Result<BinaryMask> {
    let short = height.min(width) as f64;
    let (h, w) = (height as f64, width as f64);
    let mut disks: Vec<(f64, f64, f64)> = Vec::with_capacity(blob_count);
    for i in 0..blob_count {
        let r = rng.uniform(0.14, 0.26) * short;
        let (cy, cx) = if i == 0 {
            (rng.uniform(0.4, 0.6) * h, rng.uniform(0.4, 0.6) * w)
        } else {
            let (py, px, pr) = disks[rng.below(i as u64) as usize];
            let ang = rng.uniform(0.0, std::f64::consts::TAU);
            let dist = rng.uniform(0.3, 0.9) * pr;
            ((py + dist * ang.sin()).clamp(0.25 * h, 0.75 * h), (px + dist * ang.cos()).clamp(0.25 * w, 0.75 * w))
        };
        disks.push((cy, cx, r));
    }
    let raw = BinaryMask::from_fn(height, width, |r, c| {
        disks.iter().any(|&(cy, cx, rad)| (r as f64 - cy).hypot(c as f64 - cx) <= rad)
    })?;
    let mask = largest_component(&majority_filter(&majority_filter(&raw)));
    if mask.is_empty() {
        return Err(Error::validation("generated object vanished after smoothing"));
    }
    Ok(mask)
}

/// Binary boundary of a mask (inner ring, frame edges count as background).
pub fn mask_boundary(mask: &BinaryMask) -> Result<BinaryMask> {
    Ok(extract_boundary(&mask.to_prob(), 3)?.threshold(0.5))
}

/// Sketch derived from a ground-truth mask: its boundary, augmented.
pub fn gt_sketch(mask: &BinaryMask, config: &AugmentConfig) -> Result<Augmented> {
    if mask.is_empty() {
        return Err(Error::validation("cannot derive a sketch from an empty mask"));
    }
    augment(&mask_boundary(mask)?, config)
}

/// Generate the image, mask and sketch for `config`.
pub fn gen_sample(config: &SynthConfig) -> Result<Sample> {
    config.validate()?;
    let (h, w) = (config.height, config.width);
    let mut tex_rng = Stream::split(config.seed, TEXTURE_STREAM);
    let noise = value_noise(h, w, config.noise_scale, &mut tex_rng);
    let mut shape_rng = Stream::split(config.seed, SHAPE_STREAM);
    let sign = if shape_rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
    let mask = gen_mask(h, w, config.blob_count, &mut shape_rng)?;
    let d = config.delta;
    let pixels = noise
        .iter()
        .zip(mask.data())
        .map(|(&n, &inside)| {
            let base = d + (1.0 - 2.0 * d) * n;
            if inside {
                (base + sign * d).clamp(0.0, 1.0)
            } else {
                base
            }
        })
        .collect();
    let image = ProbMap::new(h, w, pixels)?;
    let sketch_cfg = AugmentConfig { seed: crate::rng::derive_seed(config.seed, SKETCH_STREAM), ..config.sketch.clone() };
    let augmented = gt_sketch(&mask, &sketch_cfg)?;
    Ok(Sample { image, sketch: augmented.raster.clone(), mask, augmented })
}
