//! Segmentation training losses: boundary F1, focal and adaptive focal,
//! cross-entropy, Dice, and their weighted total.
//!
//! Every reduction runs sequentially in row-major order, so reports are
//! bit-reproducible. Log terms use probabilities clamped to `[eps, 1 - eps]`.

mod boundary;
mod gradient;

pub use boundary::{boundary_f1, extend_boundary, extract_boundary, BoundaryScore};
pub use gradient::{loss_gradient, LossId};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{same_shape, BinaryMask, ProbMap};

/// Loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub theta1: usize,
    pub theta2: usize,
    pub lambda_mask: f64,
    pub lambda_dice: f64,
    pub lambda_adaptive: f64,
    pub lambda_boundary: f64,
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha: 0.25,
            theta1: 3,
            theta2: 3,
            lambda_mask: 2.0,
            lambda_dice: 5.0,
            lambda_adaptive: 5e-4,
            lambda_boundary: 1.0,
            eps: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, theta) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if theta == 0 || theta % 2 == 0 {
                return Err(Error::param(format!("{name} must be odd and at least 1, got {theta}")));
            }
        }
        if !(self.eps > 0.0 && self.eps <= 1e-3) {
            return Err(Error::param(format!("eps must lie in (0, 1e-3], got {}", self.eps)));
        }
        let weights = [
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("lambda_mask", self.lambda_mask),
            ("lambda_dice", self.lambda_dice),
            ("lambda_adaptive", self.lambda_adaptive),
            ("lambda_boundary", self.lambda_boundary),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn clamp_prob(p: f64, eps: f64) -> f64 {
    p.max(eps).min(1.0 - eps)
}

/// Probability assigned to the true class, after clamping.
pub(crate) fn p_true(p: f64, y: bool, eps: f64) -> f64 {
    let p = clamp_prob(p, eps);
    if y {
        p
    } else {
        1.0 - p
    }
}

/// Focal loss reduced two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocalScore {
    pub sum: f64,
    pub mean: f64,
}

/// `sum_i -(1 - P_t)^gamma ln P_t`.
pub fn focal_loss(pred: &ProbMap, gt: &BinaryMask, gamma: f64, eps: f64) -> Result<FocalScore> {
    same_shape(pred, gt)?;
    let mut sum = 0.0;
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        let q = p_true(p, y, eps);
        sum += -(1.0 - q).powf(gamma) * q.ln();
    }
    Ok(FocalScore { sum, mean: sum / pred.data().len() as f64 })
}

/// Adaptive focal loss together with the exponent offset it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveFocal {
    /// `1 - mean(P_t)` over foreground pixels.
    pub gamma_a: f64,
    /// Summed loss.
    pub loss: f64,
    /// The ground truth has no foreground; `gamma_a` was set to 0.
    pub degenerate: bool,
}

/// `1 - mean(P_t over foreground)`; `None` without foreground.
pub fn gamma_a(pred: &ProbMap, gt: &BinaryMask, eps: f64) -> Result<Option<f64>> {
    same_shape(pred, gt)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        if y {
            sum += clamp_prob(p, eps);
            count += 1;
        }
    }
    Ok((count > 0).then(|| 1.0 - sum / count as f64))
}

/// `sum_i [-(1 - P_t)^(gamma + gamma_a) ln P_t + alpha (1 - P_t)^(gamma + gamma_a + 1)]`
/// with `gamma_a` taken from the prediction itself.
pub fn adaptive_focal_loss(pred: &ProbMap, gt: &BinaryMask, gamma: f64, alpha: f64, eps: f64) -> Result<AdaptiveFocal> {
    let ga = gamma_a(pred, gt, eps)?;
    let g = ga.unwrap_or(0.0);
    let loss = adaptive_focal_loss_with_gamma_a(pred, gt, gamma, alpha, g, eps)?;
    Ok(AdaptiveFocal { gamma_a: g, loss, degenerate: ga.is_none() })
}

/// Adaptive focal loss with a caller-fixed `gamma_a`.
pub fn adaptive_focal_loss_with_gamma_a(
    pred: &ProbMap,
    gt: &BinaryMask,
    gamma: f64,
    alpha: f64,
    gamma_a: f64,
    eps: f64,
) -> Result<f64> {
    same_shape(pred, gt)?;
    let e = gamma + gamma_a;
    let mut sum = 0.0;
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        let q = p_true(p, y, eps);
        let m = 1.0 - q;
        sum += -m.powf(e) * q.ln() + alpha * m.powf(e + 1.0);
    }
    Ok(sum)
}

/// Mean binary cross-entropy and soft Dice loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BceDice {
    pub bce: f64,
    pub dice: f64,
}

/// Dice smoothing constant.
pub const DICE_SMOOTH: f64 = 1.0;

/// BCE on the clamped prediction; Dice on the raw prediction with smoothing 1.
pub fn bce_dice(pred: &ProbMap, gt: &BinaryMask, eps: f64) -> Result<BceDice> {
    same_shape(pred, gt)?;
    let (mut bce, mut inter, mut sp, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        bce -= p_true(p, y, eps).ln();
        if y {
            inter += p;
            sy += 1.0;
        }
        sp += p;
    }
    let dice = 1.0 - (2.0 * inter + DICE_SMOOTH) / (sp + sy + DICE_SMOOTH);
    Ok(BceDice { bce: bce / pred.data().len() as f64, dice })
}

/// Which components hit a zero-denominator convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Degeneracy {
    pub gamma_a: bool,
    pub boundary: bool,
}

/// Every loss component, the weighted total and the config that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossReport {
    pub bce: f64,
    pub dice: f64,
    pub focal: f64,
    pub focal_mean: f64,
    pub afl: f64,
    pub gamma_a: f64,
    pub bf1_precision: f64,
    pub bf1_recall: f64,
    pub bf1: f64,
    pub boundary_loss: f64,
    pub total: f64,
    pub degenerate: Degeneracy,
    pub config: LossConfig,
}

/// `lambda_mask bce + lambda_dice dice + lambda_adaptive afl + lambda_boundary boundary_loss`.
pub fn total_loss(pred: &ProbMap, gt: &BinaryMask, config: &LossConfig) -> Result<LossReport> {
    config.validate()?;
    same_shape(pred, gt)?;
    let bd = bce_dice(pred, gt, config.eps)?;
    let focal = focal_loss(pred, gt, config.gamma, config.eps)?;
    let afl = adaptive_focal_loss(pred, gt, config.gamma, config.alpha, config.eps)?;
    let bnd = boundary_f1(pred, gt, config.theta1, config.theta2)?;
    let total = config.lambda_mask * bd.bce
        + config.lambda_dice * bd.dice
        + config.lambda_adaptive * afl.loss
        + config.lambda_boundary * bnd.loss;
    Ok(LossReport {
        bce: bd.bce,
        dice: bd.dice,
        focal: focal.sum,
        focal_mean: focal.mean,
        afl: afl.loss,
        gamma_a: afl.gamma_a,
        bf1_precision: bnd.precision,
        bf1_recall: bnd.recall,
        bf1: bnd.bf1,
        boundary_loss: bnd.loss,
        total,
        degenerate: Degeneracy { gamma_a: afl.degenerate, boundary: bnd.degenerate },
        config: *config,
    })
}
