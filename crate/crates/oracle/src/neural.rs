//! Scalar-loop references for the toy fusion and adapter blocks.
//!
//! Weights are row-major `[n_in][n_out]`, applied as `y = x W + b`.

/// Dense layer weights.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn apply(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * self.n_out];
        for r in 0..rows {
            for o in 0..self.n_out {
                let mut acc = self.b[o];
                for i in 0..self.n_in {
                    acc += x[r * self.n_in + i] * self.w[i * self.n_out + o];
                }
                y[r * self.n_out + o] = acc;
            }
        }
        y
    }
}

/// Multi-head cross-attention, queries from `fi` (`t x d`), keys and values
/// from `fs` (`ts x d`).
#[allow(clippy::too_many_arguments)]
pub fn cross_attention(
    fi: &[f64],
    t: usize,
    fs: &[f64],
    ts: usize,
    d: usize,
    heads: usize,
    q: &Dense,
    k: &Dense,
    v: &Dense,
    o: &Dense,
) -> Vec<f64> {
    let qm = q.apply(fi, t);
    let km = k.apply(fs, ts);
    let vm = v.apply(fs, ts);
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut concat = vec![0.0; t * d];
    for h in 0..heads {
        for i in 0..t {
            let mut scores = vec![0.0; ts];
            for j in 0..ts {
                let mut s = 0.0;
                for c in 0..dh {
                    s += qm[i * d + h * dh + c] * km[j * d + h * dh + c];
                }
                scores[j] = s * scale;
            }
            let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - mx).exp();
                z += *s;
            }
            for c in 0..dh {
                let mut acc = 0.0;
                for j in 0..ts {
                    acc += scores[j] / z * vm[j * d + h * dh + c];
                }
                concat[i * d + h * dh + c] = acc;
            }
        }
    }
    o.apply(&concat, t)
}

/// Mean-pool `fs` over tokens, project, split into `(gamma, beta, alpha)`.
pub fn film(fs: &[f64], ts: usize, d: usize, lin: &Dense) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pooled = vec![0.0; d];
    for j in 0..ts {
        for c in 0..d {
            pooled[c] += fs[j * d + c];
        }
    }
    for p in pooled.iter_mut() {
        *p /= ts as f64;
    }
    let out = lin.apply(&pooled, 1);
    (out[..d].to_vec(), out[d..2 * d].to_vec(), out[2 * d..3 * d].to_vec())
}

/// `F_U = F_I + alpha * (O * (1 + gamma) + beta)`, per channel.
#[allow(clippy::too_many_arguments)]
pub fn fusion(
    fi: &[f64],
    t: usize,
    fs: &[f64],
    ts: usize,
    d: usize,
    heads: usize,
    q: &Dense,
    k: &Dense,
    v: &Dense,
    o: &Dense,
    film_lin: &Dense,
) -> Vec<f64> {
    let att = cross_attention(fi, t, fs, ts, d, heads, q, k, v, o);
    let (g, b, a) = film(fs, ts, d, film_lin);
    let mut out = vec![0.0; t * d];
    for i in 0..t {
        for c in 0..d {
            out[i * d + c] = fi[i * d + c] + a[c] * (att[i * d + c] * (1.0 + g[c]) + b[c]);
        }
    }
    out
}

/// erf via the all-positive series `2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!`.
pub fn erf(x: f64) -> f64 {
    if x.abs() > 6.0 {
        return x.signum();
    }
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= 2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp() * sum
}

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Non-overlapping `p x p` patches, row-major over the patch grid, each
/// flattened row-major and projected.
pub fn patch_embed(img: &[f64], h: usize, w: usize, p: usize, lin: &Dense) -> Vec<f64> {
    let (gh, gw) = (h / p, w / p);
    let mut out = Vec::new();
    for py in 0..gh {
        for px in 0..gw {
            for o in 0..lin.n_out {
                let mut acc = lin.b[o];
                let mut k = 0;
                for y in 0..p {
                    for x in 0..p {
                        acc += img[(py * p + y) * w + px * p + x] * lin.w[k * lin.n_out + o];
                        k += 1;
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// `up(GELU(mlp(hfc + hpe)))`.
pub fn adapter(hfc: &[f64], hpe: &[f64], t: usize, mlp: &Dense, up: &Dense) -> Vec<f64> {
    let sum: Vec<f64> = hfc.iter().zip(hpe).map(|(a, b)| a + b).collect();
    let hidden: Vec<f64> = mlp.apply(&sum, t).into_iter().map(gelu).collect();
    up.apply(&hidden, t)
}

/// Naive 2-D DFT (`inverse` uses `+i` and divides by `h * w`).
pub fn dft2(re: &[f64], im: &[f64], h: usize, w: usize, inverse: bool) -> (Vec<f64>, Vec<f64>) {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out_re = vec![0.0; h * w];
    let mut out_im = vec![0.0; h * w];
    for ky in 0..h {
        for kx in 0..w {
            let (mut sr, mut si) = (0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let ang = sign
                        * 2.0
                        * std::f64::consts::PI
                        * ((ky * y) as f64 / h as f64 + (kx * x) as f64 / w as f64);
                    let (s, c) = ang.sin_cos();
                    let (a, b) = (re[y * w + x], im[y * w + x]);
                    sr += a * c - b * s;
                    si += a * s + b * c;
                }
            }
            if inverse {
                sr /= (h * w) as f64;
                si /= (h * w) as f64;
            }
            out_re[ky * w + kx] = sr;
            out_im[ky * w + kx] = si;
        }
    }
    (out_re, out_im)
}

/// Zero the centred low-frequency square of side `ceil(tau * min(h, w))`
/// and return the real part of the inverse transform.
pub fn highpass(img: &[f64], h: usize, w: usize, tau: f64) -> Vec<f64> {
    let (mut re, mut im) = dft2(img, &vec![0.0; h * w], h, w, false);
    let side = (tau * h.min(w) as f64).ceil() as usize;
    // Shifted row i holds frequency (i - h/2) mod h.
    for sy in 0..h {
        for sx in 0..w {
            let in_y = sy + side / 2 >= h / 2 && sy < h / 2 - side / 2 + side;
            let in_x = sx + side / 2 >= w / 2 && sx < w / 2 - side / 2 + side;
            if side > 0 && in_y && in_x {
                let ky = (sy + h - h / 2) % h;
                let kx = (sx + w - w / 2) % w;
                re[ky * w + kx] = 0.0;
                im[ky * w + kx] = 0.0;
            }
        }
    }
    dft2(&re, &im, h, w, true).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_values() {
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((erf(-2.0) + 0.995_322_265_018_952_7).abs() < 1e-15);
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn dft_round_trip() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let (r, i) = dft2(&x, &[0.0; 12], 3, 4, false);
        let (back, _) = dft2(&r, &i, 3, 4, true);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
