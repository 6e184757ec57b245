//! Raster references: window enumeration, flood fill, dual-component Euler.

/// Max over every `theta x theta` window by direct enumeration; out-of-frame
/// cells read `pad`.
pub fn maxpool_naive(data: &[f64], h: usize, w: usize, theta: usize, pad: f64) -> Vec<f64> {
    let r = (theta / 2) as i64;
    let mut out = vec![0.0; h * w];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut vals = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    let (yy, xx) = (y + dy, x + dx);
                    if yy < 0 || xx < 0 || yy >= h as i64 || xx >= w as i64 {
                        vals.push(pad);
                    } else {
                        vals.push(data[(yy * w as i64 + xx) as usize]);
                    }
                }
            }
            out[(y * w as i64 + x) as usize] = vals.into_iter().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

fn neighbours(eight: bool) -> Vec<(i64, i64)> {
    let mut v = Vec::new();
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            if (dy, dx) == (0, 0) {
                continue;
            }
            if eight || dy == 0 || dx == 0 {
                v.push((dy, dx));
            }
        }
    }
    v
}

/// Flood-fill labelling of the cells where `mask == target`; labels in
/// first-pixel scan order. Returns `(labels, count)`.
pub fn flood_fill_labels(mask: &[bool], h: usize, w: usize, eight: bool, target: bool) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; h * w];
    let mut count = 0;
    let nb = neighbours(eight);
    for start in 0..h * w {
        if mask[start] != target || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let (y, x) = ((i / w) as i64, (i % w) as i64);
            for &(dy, dx) in &nb {
                let (yy, xx) = (y + dy, x + dx);
                if yy < 0 || xx < 0 || yy >= h as i64 || xx >= w as i64 {
                    continue;
                }
                let j = (yy * w as i64 + xx) as usize;
                if mask[j] == target && labels[j] == 0 {
                    labels[j] = count;
                    stack.push(j);
                }
            }
        }
    }
    (labels, count)
}

/// Euler number as (8-connected foreground components) minus (4-connected
/// background components that do not touch the frame).
pub fn euler_by_components(mask: &[bool], h: usize, w: usize) -> i64 {
    let (_, fg) = flood_fill_labels(mask, h, w, true, true);
    let (bg_labels, bg) = flood_fill_labels(mask, h, w, false, false);
    let mut touches = vec![false; bg as usize + 1];
    for y in 0..h {
        for x in 0..w {
            if y == 0 || x == 0 || y == h - 1 || x == w - 1 {
                touches[bg_labels[y * w + x] as usize] = true;
            }
        }
    }
    let holes = (1..=bg as usize).filter(|&l| !touches[l]).count() as i64;
    fg as i64 - holes
}

/// Random blob mask with up to `holes` punched holes: a union of discs and
/// rectangles with smaller discs removed strictly inside.
pub fn random_shape(rng: &mut crate::TestRng, h: usize, w: usize, holes: usize) -> Vec<bool> {
    let mut m = vec![false; h * w];
    let cy = h as f64 / 2.0;
    let cx = w as f64 / 2.0;
    let parts = 1 + rng.below(3);
    for _ in 0..parts {
        let py = cy + rng.range(-(h as f64) / 6.0, h as f64 / 6.0);
        let px = cx + rng.range(-(w as f64) / 6.0, w as f64 / 6.0);
        let rad = rng.range(h.min(w) as f64 / 6.0, h.min(w) as f64 / 3.5);
        let rect = rng.chance(0.3);
        for y in 0..h {
            for x in 0..w {
                let dy = y as f64 - py;
                let dx = x as f64 - px;
                let inside = if rect { dy.abs() <= rad && dx.abs() <= rad * 0.8 } else { dy * dy + dx * dx <= rad * rad };
                if inside && y > 0 && x > 0 && y < h - 1 && x < w - 1 {
                    m[y * w + x] = true;
                }
            }
        }
    }
    let mut punched = 0;
    let mut attempts = 0;
    while punched < holes && attempts < 200 {
        attempts += 1;
        let py = rng.range(2.0, h as f64 - 3.0);
        let px = rng.range(2.0, w as f64 - 3.0);
        let rad = rng.range(1.5, 3.5);
        // Only punch where the disc plus a 2-pixel margin is foreground.
        let mut ok = true;
        for y in 0..h {
            for x in 0..w {
                let d = ((y as f64 - py).powi(2) + (x as f64 - px).powi(2)).sqrt();
                if d <= rad + 2.0 && !m[y * w + x] {
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        for y in 0..h {
            for x in 0..w {
                let d = ((y as f64 - py).powi(2) + (x as f64 - px).powi(2)).sqrt();
                if d <= rad {
                    m[y * w + x] = false;
                }
            }
        }
        punched += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_has_euler_zero() {
        let h = 5;
        let m: Vec<bool> = (0..25).map(|i| i / h == 0 || i / h == 4 || i % h == 0 || i % h == 4).collect();
        assert_eq!(euler_by_components(&m, 5, 5), 0);
    }

    #[test]
    fn naive_pool_single_spike() {
        let mut d = vec![0.0; 9];
        d[0] = 1.0;
        let out = maxpool_naive(&d, 3, 3, 3, 0.0);
        assert_eq!(out, vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
