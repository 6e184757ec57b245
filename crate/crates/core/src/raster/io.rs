//! Binary PGM (P5) and PF32 raster files.
//!
//! PF32 layout: `b"PF32"`, little-endian `u32` height, `u32` width, then
//! `height * width` little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use super::{BinaryMask, ProbMap};
use crate::error::{Error, Result};

const PF32_MAGIC: &[u8; 4] = b"PF32";

/// A raster loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Mask(BinaryMask),
    Prob(ProbMap),
}

impl Raster {
    /// View as a probability map; masks map to exact 0 / 1.
    pub fn into_prob(self) -> ProbMap {
        match self {
            Raster::Mask(m) => m.to_prob(),
            Raster::Prob(p) => p,
        }
    }

    /// View as a mask; probability maps are thresholded at 0.5.
    pub fn into_mask(self) -> BinaryMask {
        match self {
            Raster::Mask(m) => m,
            Raster::Prob(p) => p.threshold(0.5),
        }
    }
}

/// Encode a mask as P5 with maxval 255 (foreground 255, background 0).
pub fn write_pgm(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&v| if v { 255u8 } else { 0u8 }));
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(format!("PGM header: missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format!("PGM header: bad {what}")))
    }
}

/// Decode a P5 PGM; pixels at or above the midpoint of `maxval` are foreground
/// (128 and up for maxval 255).
pub fn read_pgm(bytes: &[u8]) -> Result<BinaryMask> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format("not a binary PGM (missing P5 magic)"));
    }
    let mut hdr = Header { bytes, pos: 2 };
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(format!("PGM dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("PGM maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if hdr.pos >= bytes.len() || !bytes[hdr.pos].is_ascii_whitespace() {
        return Err(Error::format("PGM header not terminated"));
    }
    let body = &bytes[hdr.pos + 1..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::format("PGM dimensions overflow"))?;
    let sample = if maxval < 256 { 1 } else { 2 };
    if body.len() < n * sample {
        return Err(Error::format(format!("PGM truncated: need {} bytes, have {}", n * sample, body.len())));
    }
    let cut = maxval / 2 + 1;
    let data = (0..n)
        .map(|i| {
            let v = if sample == 1 {
                body[i] as usize
            } else {
                u16::from_be_bytes([body[2 * i], body[2 * i + 1]]) as usize
            };
            v >= cut
        })
        .collect();
    BinaryMask::new(height, width, data)
}

/// Encode a probability map as PF32. Values are rounded to `f32`.
pub fn write_pf32(map: &ProbMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * map.data().len());
    out.extend_from_slice(PF32_MAGIC);
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    for &v in map.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn read_pf32(bytes: &[u8]) -> Result<ProbMap> {
    if bytes.len() < 12 || &bytes[..4] != PF32_MAGIC {
        return Err(Error::format("not a PF32 raster (bad magic or short header)"));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if height == 0 || width == 0 {
        return Err(Error::format(format!("PF32 dimensions {height}x{width}")));
    }
    let n = height
        .checked_mul(width)
        .ok_or_else(|| Error::format("PF32 dimensions overflow"))?;
    let body = &bytes[12..];
    if body.len() != n * 4 {
        return Err(Error::format(format!("PF32 body is {} bytes, expected {}", body.len(), n * 4)));
    }
    let data = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    ProbMap::new(height, width, data)
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| with_path(path, e))
}

/// Load by sniffing the magic bytes.
pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let bytes = fs::read(path.as_ref()).map_err(|e| with_path(path.as_ref(), e))?;
    if bytes.starts_with(PF32_MAGIC) {
        read_pf32(&bytes).map(Raster::Prob)
    } else if bytes.starts_with(b"P5") {
        read_pgm(&bytes).map(Raster::Mask)
    } else {
        Err(Error::format(format!("{}: unrecognised raster format", path.as_ref().display())))
    }
}

pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &write_pgm(mask))
}

pub fn save_prob(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &write_pf32(map))
}

pub fn save_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    match raster {
        Raster::Mask(m) => save_mask(m, path),
        Raster::Prob(p) => save_prob(p, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_threshold_is_midpoint() {
        let bytes = b"P5\n4 1\n255\n\x00\x7f\x80\xff";
        let m = read_pgm(bytes).unwrap();
        assert_eq!(m.data(), &[false, false, true, true]);
    }

    #[test]
    fn pgm_header_comments_and_wide_samples() {
        let bytes = b"P5 # made by hand\n2 1\n# max\n65535\n\x00\x01\xff\xff";
        let m = read_pgm(bytes).unwrap();
        assert_eq!(m.data(), &[false, true]);
    }

    #[test]
    fn truncated_inputs_are_format_errors() {
        assert!(matches!(read_pgm(b"P5\n4 4\n255\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(read_pgm(b"P2\n1 1\n255\n0"), Err(Error::Format(_))));
        let map = ProbMap::new(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let mut bytes = write_pf32(&map);
        bytes.pop();
        assert!(matches!(read_pf32(&bytes), Err(Error::Format(_))));
        assert!(matches!(read_pf32(b"PF32\x01\x00"), Err(Error::Format(_))));
    }

    #[test]
    fn pf32_out_of_range_is_validation_error() {
        let mut bytes = b"PF32".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(read_pf32(&bytes), Err(Error::Validation(_))));
    }

    #[test]
    fn files_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mask = BinaryMask::from_fn(3, 5, |r, c| (r + c) % 2 == 0).unwrap();
        let prob = ProbMap::new(1, 3, vec![0.0, 0.125, 1.0]).unwrap();
        save_mask(&mask, dir.path().join("m.pgm")).unwrap();
        save_prob(&prob, dir.path().join("p.pf32")).unwrap();
        assert_eq!(load_raster(dir.path().join("m.pgm")).unwrap(), Raster::Mask(mask));
        assert_eq!(load_raster(dir.path().join("p.pf32")).unwrap(), Raster::Prob(prob));
        std::fs::write(dir.path().join("x.bin"), b"hello").unwrap();
        assert!(load_raster(dir.path().join("x.bin")).unwrap_err().is_io_or_format());
    }
}
