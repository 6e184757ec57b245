//! Curve references: de Casteljau evaluation, sampling and digital lines.

pub type Pt = [f64; 2];

fn lerp(a: Pt, b: Pt, t: f64) -> Pt {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Cubic Bezier by repeated linear interpolation.
pub fn de_casteljau(p: [Pt; 4], t: f64) -> Pt {
    let a = lerp(p[0], p[1], t);
    let b = lerp(p[1], p[2], t);
    let c = lerp(p[2], p[3], t);
    let d = lerp(a, b, t);
    let e = lerp(b, c, t);
    lerp(d, e, t)
}

/// Normalised cumulative chord length of a polyline.
pub fn chord_params(points: &[Pt]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in points.windows(2) {
        let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        acc.push(acc.last().unwrap() + d);
    }
    let total = *acc.last().unwrap();
    acc.into_iter().map(|v| v / total).collect()
}

/// Samples of the curve at `m` parameters: uniform in `t` with a seeded
/// jitter of up to a quarter step, endpoints included.
pub fn jittered_samples(p: [Pt; 4], m: usize, rng: &mut crate::TestRng) -> (Vec<Pt>, Vec<f64>) {
    let step = 1.0 / (m - 1) as f64;
    let t: Vec<f64> = (0..m)
        .map(|i| if i == 0 || i == m - 1 { i as f64 * step } else { i as f64 * step + rng.range(-0.25, 0.25) * step })
        .collect();
    (t.iter().map(|&ti| de_casteljau(p, ti)).collect(), t)
}

/// Random, well-spread cubic: endpoints at least 10 apart, inner controls
/// jittered around the thirds of the chord.
pub fn random_cubic(rng: &mut crate::TestRng, extent: f64) -> [Pt; 4] {
    let p0 = [rng.range(0.0, extent), rng.range(0.0, extent)];
    let mut p3 = [rng.range(0.0, extent), rng.range(0.0, extent)];
    while ((p3[0] - p0[0]).powi(2) + (p3[1] - p0[1]).powi(2)).sqrt() < 10.0 {
        p3 = [rng.range(0.0, extent), rng.range(0.0, extent)];
    }
    let j = extent / 6.0;
    let p1 = [
        p0[0] + (p3[0] - p0[0]) / 3.0 + rng.range(-j, j),
        p0[1] + (p3[1] - p0[1]) / 3.0 + rng.range(-j, j),
    ];
    let p2 = [
        p0[0] + 2.0 * (p3[0] - p0[0]) / 3.0 + rng.range(-j, j),
        p0[1] + 2.0 * (p3[1] - p0[1]) / 3.0 + rng.range(-j, j),
    ];
    [p0, p1, p2, p3]
}

/// Integer pixels of the digital straight segment between two lattice points,
/// found by rounding uniformly spaced samples along the dominant axis.
pub fn line_pixels(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs());
    if steps == 0 {
        return vec![a];
    }
    (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            (
                (a.0 as f64 + (b.0 - a.0) as f64 * t).round() as i64,
                (a.1 as f64 + (b.1 - a.1) as f64 * t).round() as i64,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_of_reference_curve() {
        let p = [[0.0, 0.0], [1.0, 2.0], [3.0, 2.0], [4.0, 0.0]];
        assert_eq!(de_casteljau(p, 0.5), [2.0, 1.5]);
    }

    #[test]
    fn uniform_line_chord_params_equal_t() {
        let p = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let t: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let pts: Vec<Pt> = t.iter().map(|&v| de_casteljau(p, v)).collect();
        for (a, b) in chord_params(&pts).iter().zip(&t) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
