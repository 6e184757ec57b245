//! Numerics and geometry for sketch-guided camouflaged object segmentation.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`raster`]: binary masks, probability maps, windowed max-pooling,
//!   connectivity and Euler number, PGM / PF32 I/O.
//! - [`sketch`]: skeletonization, patch partitioning, cubic Bezier refitting,
//!   control-point perturbation and re-rasterization of sketches.
//! - [`losses`]: soft boundary-F1 loss, focal and adaptive focal loss,
//!   BCE / Dice and the weighted total, with analytic gradients.
//! - [`neural`]: toy-scale FiLM-gated cross-attention fusion and the
//!   high-frequency adapter, plus finite-difference gradient checking.
//! - [`metrics`]: MAE, IoU, F-beta and boundary-F1 evaluation.
//! - [`synth`]: deterministic synthetic camouflage samples.

pub mod error;
pub mod losses;
pub mod metrics;
pub mod neural;
pub mod raster;
pub mod rng;
pub mod sketch;
pub mod synth;

pub use error::{Error, Result};
