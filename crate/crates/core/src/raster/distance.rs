//! Set distances between the foreground pixels of two masks.

use super::BinaryMask;

/// Distance from every foreground pixel of `from` to the nearest foreground
/// pixel of `to`. Returns `None` when `to` is empty and `from` is not.
pub fn directed_distances(from: &BinaryMask, to: &BinaryMask) -> Option<Vec<f64>> {
    let src = from.pixels();
    let dst = to.pixels();
    if dst.is_empty() {
        return if src.is_empty() { Some(Vec::new()) } else { None };
    }
    Some(
        src.iter()
            .map(|&(r, c)| {
                dst.iter()
                    .map(|&(rr, cc)| {
                        let dr = r as f64 - rr as f64;
                        let dc = c as f64 - cc as f64;
                        dr * dr + dc * dc
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect(),
    )
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Symmetric Chamfer distance: the average of the two directed mean
/// nearest-neighbour distances. Infinite when exactly one set is empty.
pub fn chamfer_distance(a: &BinaryMask, b: &BinaryMask) -> f64 {
    match (directed_distances(a, b), directed_distances(b, a)) {
        (Some(ab), Some(ba)) => 0.5 * (mean(&ab) + mean(&ba)),
        _ => f64::INFINITY,
    }
}

/// Symmetric Hausdorff distance. Infinite when exactly one set is empty.
pub fn hausdorff_distance(a: &BinaryMask, b: &BinaryMask) -> f64 {
    match (directed_distances(a, b), directed_distances(b, a)) {
        (Some(ab), Some(ba)) => ab.into_iter().chain(ba).fold(0.0, f64::max),
        _ => f64::INFINITY,
    }
}
