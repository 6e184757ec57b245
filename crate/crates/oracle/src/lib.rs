//! Independent reference implementations used only by tests.
//!
//! Everything here works on raw slices and is written in the most direct form
//! available (window enumeration, flood fill, de Casteljau, naive DFT, scalar
//! loops) so it shares no code path with `camokit-core`.

pub mod geometry;
pub mod losses;
pub mod neural;
pub mod raster;

/// Compensated (double-double) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct DdSum {
    hi: f64,
    lo: f64,
}

impl DdSum {
    pub fn add(&mut self, x: f64) {
        // Knuth two-sum.
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Small deterministic generator for test inputs (xorshift64*).
#[derive(Debug, Clone)]
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
