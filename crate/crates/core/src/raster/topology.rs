//! Connectivity, labelling and digital topology.
//!
//! Foreground is 8-connected and background 4-connected throughout.

use std::sync::OnceLock;

use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
        }
    }
}

/// Component labels; 0 is background, components are `1..=count` in
/// first-pixel scan order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl LabelMap {
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Pixel count of each component, indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count as usize];
        for &l in &self.labels {
            if l > 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // Keep the smaller index as root so roots are first-seen pixels.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Two-pass union-find labelling.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (h, w) = (mask.height(), mask.width());
    let data = mask.data();
    let mut parent: Vec<usize> = (0..data.len()).collect();
    // Only look at already-visited neighbours (above and to the left).
    let back: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
    };
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !data[i] {
                continue;
            }
            for &(dr, dc) in back {
                if mask.get_signed(r as i64 + dr, c as i64 + dc) {
                    let j = (r as i64 + dr) as usize * w + (c as i64 + dc) as usize;
                    union(&mut parent, i, j);
                }
            }
        }
    }
    let mut labels = vec![0u32; data.len()];
    let mut root_label = vec![0u32; data.len()];
    let mut count = 0;
    for i in 0..data.len() {
        if !data[i] {
            continue;
        }
        let root = find(&mut parent, i);
        if root_label[root] == 0 {
            count += 1;
            root_label[root] = count;
        }
        labels[i] = root_label[root];
    }
    LabelMap { height: h, width: w, labels, count }
}

/// Euler number (components minus holes) by bit-quad counting.
///
/// Counts 2x2 windows over the mask padded with background. For 8-connected
/// foreground, `E = (Q1 - Q3 - 2 QD) / 4`.
pub fn euler_number(mask: &BinaryMask) -> i64 {
    let (h, w) = (mask.height() as i64, mask.width() as i64);
    let (mut q1, mut q3, mut qd) = (0i64, 0i64, 0i64);
    for r in -1..h {
        for c in -1..w {
            let a = mask.get_signed(r, c);
            let b = mask.get_signed(r, c + 1);
            let d = mask.get_signed(r + 1, c);
            let e = mask.get_signed(r + 1, c + 1);
            match a as u8 + b as u8 + d as u8 + e as u8 {
                1 => q1 += 1,
                3 => q3 += 1,
                2 if a == e => qd += 1,
                _ => {}
            }
        }
    }
    (q1 - q3 - 2 * qd) / 4
}

// Neighbour ring in clockwise order starting at north-west.
const RING: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// 8-bit neighbourhood code of `(row, col)`; bit `k` is `RING[k]`.
pub(crate) fn neighbourhood(mask: &BinaryMask, row: usize, col: usize) -> u8 {
    let mut code = 0u8;
    for (k, &(dr, dc)) in RING.iter().enumerate() {
        if mask.get_signed(row as i64 + dr, col as i64 + dc) {
            code |= 1 << k;
        }
    }
    code
}

fn ring_components(code: u8, foreground: bool, eight: bool, touching_p4: bool) -> u32 {
    let member = |k: usize| ((code >> k) & 1 == 1) == foreground;
    let adjacent = |a: usize, b: usize| {
        let (da, db) = (RING[a], RING[b]);
        let (dr, dc) = ((da.0 - db.0).abs(), (da.1 - db.1).abs());
        if eight {
            dr.max(dc) == 1
        } else {
            dr + dc == 1
        }
    };
    let mut seen = [false; 8];
    let mut count = 0;
    for start in 0..8 {
        if seen[start] || !member(start) {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut touches = false;
        while let Some(k) = stack.pop() {
            // Odd ring slots are the 4-neighbours of the centre.
            touches |= k % 2 == 1;
            for n in 0..8 {
                if !seen[n] && member(n) && adjacent(k, n) {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if !touching_p4 || touches {
            count += 1;
        }
    }
    count
}

fn simple_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [false; 256];
        for (code, slot) in t.iter_mut().enumerate() {
            let code = code as u8;
            *slot = ring_components(code, true, true, false) == 1 && ring_components(code, false, false, true) == 1;
        }
        t
    })
}

/// Whether removing the foreground pixel at `(row, col)` preserves topology.
///
/// A pixel is simple when its 8-neighbourhood holds exactly one 8-connected
/// foreground component and exactly one 4-connected background component
/// 4-adjacent to it.
pub fn is_simple(mask: &BinaryMask, row: usize, col: usize) -> bool {
    simple_table()[neighbourhood(mask, row, col) as usize]
}
