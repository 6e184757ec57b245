//! Mask-quality metrics: MAE, IoU, F-beta and boundary F1, plus corpus
//! aggregation.
//!
//! IoU, F-beta and boundary F1 binarize the prediction at [`THRESHOLD`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::boundary_f1;
use crate::raster::{same_shape, BinaryMask, ProbMap};

/// Binarization threshold; `pred >= THRESHOLD` is foreground.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    /// `beta^2` of the F-measure.
    pub beta2: f64,
    pub theta1: usize,
    pub theta2: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { beta2: 0.3, theta1: 3, theta2: 3 }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta2 > 0.0 && self.beta2.is_finite()) {
            return Err(Error::param(format!("beta2 must be positive, got {}", self.beta2)));
        }
        for t in [self.theta1, self.theta2] {
            if t == 0 || t % 2 == 0 {
                return Err(Error::param(format!("window sizes must be odd, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionMetrics {
    pub mae: f64,
    pub iou: f64,
    pub f_beta: f64,
}

/// MAE on the soft prediction; IoU and F-beta on the thresholded one.
///
/// IoU of two empty masks is 1. Precision, recall and F-beta with a zero
/// denominator are 0.
pub fn region_metrics(pred: &ProbMap, gt: &BinaryMask, beta2: f64) -> Result<RegionMetrics> {
    same_shape(pred, gt)?;
    let (mut abs, mut tp, mut fp, mut fn_) = (0.0, 0usize, 0usize, 0usize);
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        abs += (p - if y { 1.0 } else { 0.0 }).abs();
        match (p >= THRESHOLD, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let union = tp + fp + fn_;
    let iou = if union == 0 { 1.0 } else { tp as f64 / union as f64 };
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let (precision, recall) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
    let den = beta2 * precision + recall;
    let f_beta = if den == 0.0 { 0.0 } else { (1.0 + beta2) * precision * recall / den };
    Ok(RegionMetrics { mae: abs / pred.data().len() as f64, iou, f_beta })
}

/// Boundary F1 of the thresholded prediction.
pub fn boundary_metric(pred: &ProbMap, gt: &BinaryMask, theta1: usize, theta2: usize) -> Result<f64> {
    let hard = pred.threshold(THRESHOLD).to_prob();
    Ok(boundary_f1(&hard, gt, theta1, theta2)?.bf1)
}

/// Metrics of one prediction/ground-truth pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub mae: f64,
    pub iou: f64,
    pub f_beta: f64,
    pub boundary_f1: f64,
}

pub fn evaluate(name: &str, pred: &ProbMap, gt: &BinaryMask, config: &MetricConfig) -> Result<ImageMetrics> {
    config.validate()?;
    let r = region_metrics(pred, gt, config.beta2)?;
    let b = boundary_metric(pred, gt, config.theta1, config.theta2)?;
    Ok(ImageMetrics { name: name.to_owned(), mae: r.mae, iou: r.iou, f_beta: r.f_beta, boundary_f1: b })
}

/// Unweighted corpus means and the per-image rows they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub mae: f64,
    pub iou: f64,
    pub f_beta: f64,
    pub boundary_f1: f64,
    pub count: usize,
    pub per_image: Vec<ImageMetrics>,
}

fn canonical_order(a: &ImageMetrics, b: &ImageMetrics) -> Ordering {
    a.name
        .cmp(&b.name)
        .then(a.mae.total_cmp(&b.mae))
        .then(a.iou.total_cmp(&b.iou))
        .then(a.f_beta.total_cmp(&b.f_beta))
        .then(a.boundary_f1.total_cmp(&b.boundary_f1))
}

/// Mean of every metric. Rows are sorted first, so any permutation of the
/// input yields a bit-identical report.
pub fn aggregate(mut reports: Vec<ImageMetrics>) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::validation("cannot aggregate an empty report list"));
    }
    reports.sort_by(canonical_order);
    let n = reports.len() as f64;
    let mean = |f: fn(&ImageMetrics) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        mae: mean(|r| r.mae),
        iou: mean(|r| r.iou),
        f_beta: mean(|r| r.f_beta),
        boundary_f1: mean(|r| r.boundary_f1),
        count: reports.len(),
        per_image: reports,
    })
}
