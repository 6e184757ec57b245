//! Topology-preserving thinning.
//!
//! Directional sequential thinning: each pass peels border pixels facing one
//! of N/S/W/E, deleting a candidate only if it is still a simple point at the
//! moment of deletion and is not a line end. Deleting simple points one at a
//! time never changes the component or hole count, so the Euler number is
//! preserved exactly.

use crate::raster::{is_simple, BinaryMask};

const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

fn neighbour_count(mask: &BinaryMask, r: usize, c: usize) -> usize {
    let mut n = 0;
    for dr in -1..=1i64 {
        for dc in -1..=1i64 {
            if (dr, dc) != (0, 0) && mask.get_signed(r as i64 + dr, c as i64 + dc) {
                n += 1;
            }
        }
    }
    n
}

fn deletable(mask: &BinaryMask, r: usize, c: usize) -> bool {
    mask.get(r, c) && neighbour_count(mask, r, c) >= 2 && is_simple(mask, r, c)
}

/// Thin `mask` to a centreline one pixel wide.
///
/// The result is a subset of the input with the same Euler number. Line ends
/// are kept, so already-thin strokes are returned unchanged.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut out = mask.clone();
    loop {
        let mut changed = false;
        for &(dr, dc) in &DIRECTIONS {
            let candidates: Vec<(usize, usize)> = out
                .pixels()
                .into_iter()
                .filter(|&(r, c)| !out.get_signed(r as i64 + dr, c as i64 + dc) && deletable(&out, r, c))
                .collect();
            for (r, c) in candidates {
                if deletable(&out, r, c) {
                    out.set(r, c, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

/// True when some 2x2 window is entirely foreground.
pub fn has_full_block(mask: &BinaryMask) -> bool {
    (0..mask.height().saturating_sub(1)).any(|r| {
        (0..mask.width().saturating_sub(1))
            .any(|c| mask.get(r, c) && mask.get(r, c + 1) && mask.get(r + 1, c) && mask.get(r + 1, c + 1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::euler_number;

    fn annulus(size: usize, wall: usize) -> BinaryMask {
        BinaryMask::from_fn(size, size, |r, c| {
            let d = r.min(c).min(size - 1 - r).min(size - 1 - c);
            d < wall
        })
        .unwrap()
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty(6, 6).unwrap();
        assert_eq!(skeletonize(&m), m);
    }

    #[test]
    fn thin_lines_are_untouched() {
        let h = BinaryMask::from_fn(5, 9, |r, c| r == 2 && (1..8).contains(&c)).unwrap();
        assert_eq!(skeletonize(&h), h);
        let d = BinaryMask::from_fn(7, 7, |r, c| r == c).unwrap();
        assert_eq!(skeletonize(&d), d);
    }

    #[test]
    fn thick_annulus_becomes_closed_loop() {
        let m = annulus(15, 3);
        let s = skeletonize(&m);
        assert_eq!(euler_number(&m), 0);
        assert_eq!(euler_number(&s), 0);
        assert!(!has_full_block(&s));
        for (r, c) in s.pixels() {
            assert!(m.get(r, c));
            assert_eq!(neighbour_count(&s, r, c), 2, "pixel ({r},{c}) of\n{}", render(&s));
        }
    }

    #[test]
    fn filled_square_shrinks_but_stays_one_component() {
        let m = BinaryMask::from_fn(9, 9, |r, c| (2..7).contains(&r) && (2..7).contains(&c)).unwrap();
        let s = skeletonize(&m);
        assert_eq!(euler_number(&s), 1);
        assert!(!has_full_block(&s));
        assert!(s.count() >= 1);
    }

    fn render(m: &BinaryMask) -> String {
        (0..m.height())
            .map(|r| (0..m.width()).map(|c| if m.get(r, c) { '#' } else { '.' }).collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
