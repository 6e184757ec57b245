//! Per-pixel loss references with compensated accumulation.
//!
//! `pred` and `gt` are raw row-major slices; `gt` is 0/1. Log terms clamp
//! probabilities to `[eps, 1 - eps]`.

use crate::raster::maxpool_naive;
use crate::DdSum;

fn clamp(p: f64, eps: f64) -> f64 {
    p.max(eps).min(1.0 - eps)
}

/// Probability assigned to the true class.
fn p_true(p: f64, y: bool) -> f64 {
    if y {
        p
    } else {
        1.0 - p
    }
}

/// Mean binary cross-entropy.
pub fn bce(pred: &[f64], gt: &[bool], eps: f64) -> f64 {
    let mut s = DdSum::default();
    for (&p, &y) in pred.iter().zip(gt) {
        let p = clamp(p, eps);
        let term = if y { -p.ln() } else { -(1.0 - p).ln() };
        s.add(term);
    }
    s.value() / pred.len() as f64
}

/// Soft Dice with smoothing 1 on the unclamped prediction.
pub fn dice(pred: &[f64], gt: &[bool]) -> f64 {
    let (mut inter, mut sp, mut sy) = (DdSum::default(), DdSum::default(), DdSum::default());
    for (&p, &y) in pred.iter().zip(gt) {
        if y {
            inter.add(p);
            sy.add(1.0);
        }
        sp.add(p);
    }
    1.0 - (2.0 * inter.value() + 1.0) / (sp.value() + sy.value() + 1.0)
}

/// Summed focal loss.
pub fn focal(pred: &[f64], gt: &[bool], gamma: f64, eps: f64) -> f64 {
    let mut s = DdSum::default();
    for (&p, &y) in pred.iter().zip(gt) {
        let q = p_true(clamp(p, eps), y);
        s.add(-(1.0 - q).powf(gamma) * q.ln());
    }
    s.value()
}

/// `1 - mean(P_t)` over foreground pixels; 0 when there is no foreground.
pub fn gamma_a(pred: &[f64], gt: &[bool], eps: f64) -> f64 {
    let (mut num, mut den) = (DdSum::default(), DdSum::default());
    for (&p, &y) in pred.iter().zip(gt) {
        if y {
            num.add(clamp(p, eps));
            den.add(1.0);
        }
    }
    if den.value() == 0.0 {
        0.0
    } else {
        1.0 - num.value() / den.value()
    }
}

/// Summed adaptive focal loss for a given `gamma_a`.
pub fn adaptive_focal(pred: &[f64], gt: &[bool], gamma: f64, alpha: f64, gamma_a: f64, eps: f64) -> f64 {
    let e = gamma + gamma_a;
    let mut s = DdSum::default();
    for (&p, &y) in pred.iter().zip(gt) {
        let q = p_true(clamp(p, eps), y);
        s.add(-(1.0 - q).powf(e) * q.ln());
        s.add(alpha * (1.0 - q).powf(e + 1.0));
    }
    s.value()
}

/// Boundary precision, recall, F1 and loss by direct evaluation.
pub fn boundary(pred: &[f64], gt: &[bool], h: usize, w: usize, theta1: usize, theta2: usize) -> (f64, f64, f64, f64) {
    let edge = |m: &[f64]| -> Vec<f64> {
        let inv: Vec<f64> = m.iter().map(|v| 1.0 - v).collect();
        let pooled = maxpool_naive(&inv, h, w, theta1, 1.0);
        pooled.iter().zip(&inv).map(|(a, b)| (a - b).clamp(0.0, 1.0)).collect()
    };
    let gtf: Vec<f64> = gt.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect();
    let bp = edge(pred);
    let bg = edge(&gtf);
    let ep = maxpool_naive(&bp, h, w, theta2, 0.0);
    let eg = maxpool_naive(&bg, h, w, theta2, 0.0);
    let (mut pn, mut pd, mut rn, mut rd) = (DdSum::default(), DdSum::default(), DdSum::default(), DdSum::default());
    for i in 0..h * w {
        pn.add(bp[i] * eg[i]);
        pd.add(bp[i]);
        rn.add(bg[i] * ep[i]);
        rd.add(bg[i]);
    }
    let p = if pd.value() == 0.0 { 0.0 } else { pn.value() / pd.value() };
    let r = if rd.value() == 0.0 { 0.0 } else { rn.value() / rd.value() };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f, 1.0 - f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases() {
        // (1 - 0.5)^2 * ln 2
        assert!((focal(&[0.5], &[true], 2.0, 1e-7) - 0.25 * 2f64.ln()).abs() < 1e-15);
        let ga = gamma_a(&[0.5], &[true], 1e-7);
        assert_eq!(ga, 0.5);
        let afl = adaptive_focal(&[0.5], &[true], 2.0, 0.25, ga, 1e-7);
        let want = 0.5f64.powf(2.5) * 2f64.ln() + 0.25 * 0.5f64.powf(3.5);
        assert!((afl - want).abs() < 1e-15);
        assert!((bce(&[0.5; 4], &[true; 4], 1e-7) - 2f64.ln()).abs() < 1e-15);
        assert!((dice(&[0.5; 4], &[true; 4]) - 2.0 / 7.0).abs() < 1e-15);
    }
}
