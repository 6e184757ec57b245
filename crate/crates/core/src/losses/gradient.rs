//! Analytic derivatives of each loss with respect to the predicted
//! probabilities.
//!
//! Clamped pixels (outside `[eps, 1 - eps]`) get zero derivative in the
//! clamped terms. `gamma_a` is held constant. The boundary loss uses the
//! max-pool subgradient that routes each window's derivative to its argmax,
//! the first maximum in row-major scan order.

use std::str::FromStr;

use super::boundary::BoundaryParts;
use super::{gamma_a, LossConfig, DICE_SMOOTH};
use crate::error::{Error, Result};
use crate::raster::{maxpool_with_argmax, same_shape, BinaryMask, PoolSource, ProbMap, ScalarField};

/// Loss selector for [`loss_gradient`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossId {
    Bce,
    Dice,
    /// Summed focal loss.
    Focal,
    /// Summed adaptive focal loss.
    AdaptiveFocal,
    Boundary,
    Total,
}

impl LossId {
    pub const ALL: [LossId; 6] =
        [LossId::Bce, LossId::Dice, LossId::Focal, LossId::AdaptiveFocal, LossId::Boundary, LossId::Total];

    pub fn name(self) -> &'static str {
        match self {
            LossId::Bce => "bce",
            LossId::Dice => "dice",
            LossId::Focal => "focal",
            LossId::AdaptiveFocal => "afl",
            LossId::Boundary => "boundary",
            LossId::Total => "total",
        }
    }
}

impl FromStr for LossId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::param(format!("unknown loss `{s}`")))
    }
}

fn inside(p: f64, eps: f64) -> bool {
    p >= eps && p <= 1.0 - eps
}

/// d/dq of `-(1 - q)^e ln q + alpha (1 - q)^(e + 1)`.
fn focal_term_slope(q: f64, e: f64, alpha: f64) -> f64 {
    let m = 1.0 - q;
    let first = if e == 0.0 { 0.0 } else { e * m.powf(e - 1.0) * q.ln() };
    first - m.powf(e) / q - alpha * (e + 1.0) * m.powf(e)
}

fn focal_like(pred: &ProbMap, gt: &BinaryMask, e: f64, alpha: f64, eps: f64) -> Vec<f64> {
    pred.data()
        .iter()
        .zip(gt.data())
        .map(|(&p, &y)| {
            if !inside(p, eps) {
                return 0.0;
            }
            let (q, dq) = if y { (p, 1.0) } else { (1.0 - p, -1.0) };
            dq * focal_term_slope(q, e, alpha)
        })
        .collect()
}

fn bce_grad(pred: &ProbMap, gt: &BinaryMask, eps: f64) -> Vec<f64> {
    let n = pred.data().len() as f64;
    pred.data()
        .iter()
        .zip(gt.data())
        .map(|(&p, &y)| {
            if !inside(p, eps) {
                return 0.0;
            }
            let y = if y { 1.0 } else { 0.0 };
            (p - y) / (p * (1.0 - p) * n)
        })
        .collect()
}

fn dice_grad(pred: &ProbMap, gt: &BinaryMask) -> Vec<f64> {
    let (mut inter, mut sp, mut sy) = (0.0, 0.0, 0.0);
    for (&p, &y) in pred.data().iter().zip(gt.data()) {
        if y {
            inter += p;
            sy += 1.0;
        }
        sp += p;
    }
    let den = sp + sy + DICE_SMOOTH;
    let num = 2.0 * inter + DICE_SMOOTH;
    gt.data()
        .iter()
        .map(|&y| {
            let y = if y { 1.0 } else { 0.0 };
            -(2.0 * y * den - num) / (den * den)
        })
        .collect()
}

fn boundary_grad(pred: &ProbMap, gt: &BinaryMask, theta1: usize, theta2: usize) -> Result<Vec<f64>> {
    let parts = BoundaryParts::compute(pred, gt, theta1, theta2)?;
    let n = pred.data().len();
    let (p, r) = (parts.precision(), parts.recall());
    if p + r == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let s2 = (p + r) * (p + r);
    let (df_dp, df_dr) = (2.0 * r * r / s2, 2.0 * p * p / s2);
    let (h, w) = (pred.height(), pred.width());

    // dLoss/d b_pd, where Loss = 1 - F.
    let mut g_b = vec![0.0; n];
    if parts.p_den > 0.0 {
        let d2 = parts.p_den * parts.p_den;
        for (i, g) in g_b.iter_mut().enumerate() {
            *g -= df_dp * (parts.ext_gt[i] * parts.p_den - parts.p_num) / d2;
        }
    }
    if parts.r_den > 0.0 {
        let (_, ext_src) = maxpool_with_argmax(&parts.b_pd, h, w, theta2, 0.0)?;
        for (i, src) in ext_src.iter().enumerate() {
            if let PoolSource::Pixel(k) = *src {
                g_b[k] -= df_dr * parts.b_gt[i] / parts.r_den;
            }
        }
    }

    // b_i = u_{a(i)} - u_i with u = 1 - p, so dLoss/dp = -dLoss/du.
    let inv: Vec<f64> = pred.data().iter().map(|v| 1.0 - v).collect();
    let (_, src) = maxpool_with_argmax(&inv, h, w, theta1, 1.0)?;
    let mut g_u: Vec<f64> = g_b.iter().map(|g| -g).collect();
    for (i, s) in src.iter().enumerate() {
        if let PoolSource::Pixel(k) = *s {
            g_u[k] += g_b[i];
        }
    }
    Ok(g_u.into_iter().map(|g| -g).collect())
}

/// Per-pixel derivative of the selected loss with respect to `pred`.
pub fn loss_gradient(pred: &ProbMap, gt: &BinaryMask, config: &LossConfig, which: LossId) -> Result<ScalarField> {
    config.validate()?;
    same_shape(pred, gt)?;
    let eps = config.eps;
    let afl = || -> Result<Vec<f64>> {
        let ga = gamma_a(pred, gt, eps)?.unwrap_or(0.0);
        Ok(focal_like(pred, gt, config.gamma + ga, config.alpha, eps))
    };
    let data = match which {
        LossId::Bce => bce_grad(pred, gt, eps),
        LossId::Dice => dice_grad(pred, gt),
        LossId::Focal => focal_like(pred, gt, config.gamma, 0.0, eps),
        LossId::AdaptiveFocal => afl()?,
        LossId::Boundary => boundary_grad(pred, gt, config.theta1, config.theta2)?,
        LossId::Total => {
            let parts = [
                (config.lambda_mask, bce_grad(pred, gt, eps)),
                (config.lambda_dice, dice_grad(pred, gt)),
                (config.lambda_adaptive, afl()?),
                (config.lambda_boundary, boundary_grad(pred, gt, config.theta1, config.theta2)?),
            ];
            let mut acc = vec![0.0; pred.data().len()];
            for (lambda, g) in parts {
                for (a, v) in acc.iter_mut().zip(g) {
                    *a += lambda * v;
                }
            }
            acc
        }
    };
    ScalarField::new(pred.height(), pred.width(), data)
}
