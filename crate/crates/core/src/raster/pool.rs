//! Windowed max-pooling with a constant out-of-frame value.

use super::ProbMap;
use crate::error::{Error, Result};

fn check_window(theta: usize) -> Result<usize> {
    if theta == 0 || theta.is_multiple_of(2) {
        return Err(Error::param(format!("pooling window must be odd and positive, got {theta}")));
    }
    Ok(theta / 2)
}

/// Max over the `theta x theta` window centred on each pixel.
///
/// Positions outside the frame contribute `pad`. Pooling an inverted mask
/// uses `pad = 1.0` (outside is background); everything else uses `0.0`.
pub fn maxpool(map: &ProbMap, theta: usize, pad: f64) -> Result<ProbMap> {
    if !(0.0..=1.0).contains(&pad) {
        return Err(Error::param(format!("pad value {pad} outside [0, 1]")));
    }
    let data = maxpool_slice(map.data(), map.height(), map.width(), theta, pad)?;
    ProbMap::new(map.height(), map.width(), data)
}

/// Separable max-pool over a raw row-major buffer.
pub fn maxpool_slice(data: &[f64], height: usize, width: usize, theta: usize, pad: f64) -> Result<Vec<f64>> {
    let r = check_window(theta)? as i64;
    if data.len() != height * width {
        return Err(Error::shape("buffer length does not match dimensions"));
    }
    let (h, w) = (height as i64, width as i64);
    let mut rows = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut m = f64::NEG_INFINITY;
            for xx in x - r..=x + r {
                let v = if xx < 0 || xx >= w { pad } else { data[(y * w + xx) as usize] };
                m = m.max(v);
            }
            rows[(y * w + x) as usize] = m;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut m = f64::NEG_INFINITY;
            for yy in y - r..=y + r {
                let v = if yy < 0 || yy >= h { pad } else { rows[(yy * w + x) as usize] };
                m = m.max(v);
            }
            out[(y * w + x) as usize] = m;
        }
    }
    Ok(out)
}

/// Where a pooled maximum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolSource {
    /// Row-major index of the winning in-frame pixel.
    Pixel(usize),
    /// The out-of-frame pad value won.
    Padding,
}

/// Max-pool that also records the argmax of every window.
///
/// The window is scanned row-major, out-of-frame positions included, and the
/// first strict maximum wins. This fixes the subgradient on ties.
pub fn maxpool_with_argmax(
    data: &[f64],
    height: usize,
    width: usize,
    theta: usize,
    pad: f64,
) -> Result<(Vec<f64>, Vec<PoolSource>)> {
    let r = check_window(theta)? as i64;
    if data.len() != height * width {
        return Err(Error::shape("buffer length does not match dimensions"));
    }
    let (h, w) = (height as i64, width as i64);
    let mut values = Vec::with_capacity(data.len());
    let mut sources = Vec::with_capacity(data.len());
    for y in 0..h {
        for x in 0..w {
            let mut best = f64::NEG_INFINITY;
            let mut src = PoolSource::Padding;
            for yy in y - r..=y + r {
                for xx in x - r..=x + r {
                    let (v, s) = if yy < 0 || yy >= h || xx < 0 || xx >= w {
                        (pad, PoolSource::Padding)
                    } else {
                        let i = (yy * w + xx) as usize;
                        (data[i], PoolSource::Pixel(i))
                    };
                    if v > best {
                        best = v;
                        src = s;
                    }
                }
            }
            values.push(best);
            sources.push(src);
        }
    }
    Ok((values, sources))
}
