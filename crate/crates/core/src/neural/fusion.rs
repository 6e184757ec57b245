//! Multi-head cross-attention with a FiLM-style gate and residual add.

use serde::Serialize;

use super::linear::{Linear, LinearGrad};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Weights of the fusion block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionParams {
    pub d_model: usize,
    pub n_heads: usize,
    pub w_q: Linear,
    pub w_k: Linear,
    pub w_v: Linear,
    pub w_o: Linear,
    /// `d -> 3d`, split into `(gamma, beta, alpha)`.
    pub w_film: Linear,
}

impl FusionParams {
    pub fn new(d_model: usize, n_heads: usize, w_q: Linear, w_k: Linear, w_v: Linear, w_o: Linear, w_film: Linear) -> Result<Self> {
        let p = Self { d_model, n_heads, w_q, w_k, w_v, w_o, w_film };
        p.validate()?;
        Ok(p)
    }

    /// Seeded weights uniform in `[-0.1, 0.1)`.
    pub fn random(d_model: usize, n_heads: usize, seed: u64) -> Result<Self> {
        check_heads(d_model, n_heads)?;
        let mut rng = Stream::new(seed);
        let d = d_model;
        let w_q = Linear::random(d, d, &mut rng);
        let w_k = Linear::random(d, d, &mut rng);
        let w_v = Linear::random(d, d, &mut rng);
        let w_o = Linear::random(d, d, &mut rng);
        let w_film = Linear::random(d, 3 * d, &mut rng);
        Self::new(d, n_heads, w_q, w_k, w_v, w_o, w_film)
    }

    pub fn validate(&self) -> Result<()> {
        check_heads(self.d_model, self.n_heads)?;
        let d = self.d_model;
        for (name, l, out) in [
            ("w_q", &self.w_q, d),
            ("w_k", &self.w_k, d),
            ("w_v", &self.w_v, d),
            ("w_o", &self.w_o, d),
            ("w_film", &self.w_film, 3 * d),
        ] {
            if l.n_in != d || l.n_out != out {
                return Err(Error::shape(format!("{name} must be {d}x{out}, got {}x{}", l.n_in, l.n_out)));
            }
        }
        Ok(())
    }

    fn layers(&self) -> [&Linear; 5] {
        [&self.w_q, &self.w_k, &self.w_v, &self.w_o, &self.w_film]
    }

    fn layers_mut(&mut self) -> [&mut Linear; 5] {
        [&mut self.w_q, &mut self.w_k, &mut self.w_v, &mut self.w_o, &mut self.w_film]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// All weights in the order q, k, v, o, film (each `w` then `b`).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            l.flatten_into(&mut out);
        }
        out
    }

    /// Inverse of [`FusionParams::flatten`].
    pub fn load(&mut self, src: &[f64]) {
        let mut at = 0;
        for l in self.layers_mut() {
            at += l.load_from(&src[at..]);
        }
    }
}

fn check_heads(d: usize, heads: usize) -> Result<()> {
    if d == 0 || heads == 0 || !d.is_multiple_of(heads) {
        return Err(Error::param(format!("d_model {d} must be a positive multiple of n_heads {heads}")));
    }
    Ok(())
}

fn tokens(x: &Tensor, d: usize, what: &str) -> Result<usize> {
    let (t, c) = x.dims2()?;
    if c != d || t == 0 {
        return Err(Error::shape(format!("{what} must be tokens x {d} with at least one token, got {t}x{c}")));
    }
    Ok(t)
}

/// Forward intermediates kept for the backward pass.
struct AttentionCache {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `[head][query][key]` softmax weights.
    probs: Vec<f64>,
    concat: Vec<f64>,
    out: Vec<f64>,
}

fn attention_raw(fi: &[f64], t: usize, fs: &[f64], ts: usize, p: &FusionParams) -> AttentionCache {
    let d = p.d_model;
    let dh = d / p.n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = p.w_q.apply(fi, t);
    let k = p.w_k.apply(fs, ts);
    let v = p.w_v.apply(fs, ts);
    let mut probs = vec![0.0; p.n_heads * t * ts];
    let mut concat = vec![0.0; t * d];
    for h in 0..p.n_heads {
        let off = h * dh;
        for i in 0..t {
            let row = &mut probs[(h * t + i) * ts..(h * t + i + 1) * ts];
            for (j, s) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for c in 0..dh {
                    acc += q[i * d + off + c] * k[j * d + off + c];
                }
                *s = acc * scale;
            }
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in row.iter_mut() {
                *s = (*s - mx).exp();
                z += *s;
            }
            for s in row.iter_mut() {
                *s /= z;
            }
            for c in 0..dh {
                let mut acc = 0.0;
                for (j, &pj) in row.iter().enumerate() {
                    acc += pj * v[j * d + off + c];
                }
                concat[i * d + off + c] = acc;
            }
        }
    }
    let out = p.w_o.apply(&concat, t);
    AttentionCache { q, k, v, probs, concat, out }
}

/// Attention output and per-head softmax weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// `tokens x d`.
    pub output: Tensor,
    /// `heads x tokens x kv_tokens`.
    pub weights: Tensor,
}

/// `softmax(Q K^T / sqrt(d_head)) V` per head with `Q` from `fi` and `K`, `V`
/// from `fs`; heads concatenated and projected by `w_o`.
pub fn cross_attention(fi: &Tensor, fs: &Tensor, params: &FusionParams) -> Result<Attention> {
    params.validate()?;
    let t = tokens(fi, params.d_model, "F_I")?;
    let ts = tokens(fs, params.d_model, "F_S")?;
    let c = attention_raw(fi.data(), t, fs.data(), ts, params);
    Ok(Attention {
        output: Tensor::from_parts_unchecked(vec![t, params.d_model], c.out),
        weights: Tensor::from_parts_unchecked(vec![params.n_heads, t, ts], c.probs),
    })
}

/// Per-channel scale, shift and gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Film {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn mean_pool(fs: &[f64], ts: usize, d: usize) -> Vec<f64> {
    let mut pooled = vec![0.0; d];
    for j in 0..ts {
        for (p, v) in pooled.iter_mut().zip(&fs[j * d..(j + 1) * d]) {
            *p += v;
        }
    }
    for p in pooled.iter_mut() {
        *p /= ts as f64;
    }
    pooled
}

fn film_raw(fs: &[f64], ts: usize, p: &FusionParams) -> (Vec<f64>, Film) {
    let d = p.d_model;
    let pooled = mean_pool(fs, ts, d);
    let out = p.w_film.apply(&pooled, 1);
    let film = Film { gamma: out[..d].to_vec(), beta: out[d..2 * d].to_vec(), alpha: out[2 * d..].to_vec() };
    (pooled, film)
}

/// Mean-pool `fs` over tokens and project to `(gamma, beta, alpha)`.
pub fn film_gate(fs: &Tensor, params: &FusionParams) -> Result<Film> {
    params.validate()?;
    let ts = tokens(fs, params.d_model, "F_S")?;
    Ok(film_raw(fs.data(), ts, params).1)
}

fn combine(fi: &[f64], o: &[f64], film: &Film, d: usize) -> Vec<f64> {
    fi.iter()
        .zip(o)
        .enumerate()
        .map(|(idx, (&x, &ov))| {
            let c = idx % d;
            x + film.alpha[c] * (ov * (1.0 + film.gamma[c]) + film.beta[c])
        })
        .collect()
}

/// `F_U = F_I + alpha * (O * (1 + gamma) + beta)`, broadcast per channel.
pub fn fusion_forward(fi: &Tensor, fs: &Tensor, params: &FusionParams) -> Result<Tensor> {
    params.validate()?;
    let d = params.d_model;
    let t = tokens(fi, d, "F_I")?;
    let ts = tokens(fs, d, "F_S")?;
    let att = attention_raw(fi.data(), t, fs.data(), ts, params);
    let (_, film) = film_raw(fs.data(), ts, params);
    Ok(Tensor::from_parts_unchecked(vec![t, d], combine(fi.data(), &att.out, &film, d)))
}

/// Gradients of a scalar with respect to every fusion input and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGrad {
    pub fi: Vec<f64>,
    pub fs: Vec<f64>,
    pub w_q: LinearGrad,
    pub w_k: LinearGrad,
    pub w_v: LinearGrad,
    pub w_o: LinearGrad,
    pub w_film: LinearGrad,
}

impl FusionGrad {
    /// Parameter gradients in [`FusionParams::flatten`] order.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in [&self.w_q, &self.w_k, &self.w_v, &self.w_o, &self.w_film] {
            g.flatten_into(&mut out);
        }
        out
    }
}

/// Backward pass through attention given the gradient of its output.
/// Returns `(g_fi, g_fs)` and accumulates weight gradients.
fn attention_backward(
    fi: &[f64],
    t: usize,
    fs: &[f64],
    ts: usize,
    p: &FusionParams,
    c: &AttentionCache,
    g_out: &[f64],
    g: &mut FusionGrad,
) -> (Vec<f64>, Vec<f64>) {
    let d = p.d_model;
    let dh = d / p.n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let g_concat = p.w_o.backward(&c.concat, g_out, t, &mut g.w_o);
    let mut gq = vec![0.0; t * d];
    let mut gk = vec![0.0; ts * d];
    let mut gv = vec![0.0; ts * d];
    let mut gp = vec![0.0; ts];
    for h in 0..p.n_heads {
        let off = h * dh;
        for i in 0..t {
            let probs = &c.probs[(h * t + i) * ts..(h * t + i + 1) * ts];
            let gc = &g_concat[i * d + off..i * d + off + dh];
            let mut dot = 0.0;
            for j in 0..ts {
                let vj = &c.v[j * d + off..j * d + off + dh];
                gp[j] = gc.iter().zip(vj).map(|(a, b)| a * b).sum();
                dot += probs[j] * gp[j];
                for (cc, &gcv) in gc.iter().enumerate() {
                    gv[j * d + off + cc] += probs[j] * gcv;
                }
            }
            for j in 0..ts {
                let ga = probs[j] * (gp[j] - dot) * scale;
                for cc in 0..dh {
                    gq[i * d + off + cc] += ga * c.k[j * d + off + cc];
                    gk[j * d + off + cc] += ga * c.q[i * d + off + cc];
                }
            }
        }
    }
    let g_fi = p.w_q.backward(fi, &gq, t, &mut g.w_q);
    let gk_in = p.w_k.backward(fs, &gk, ts, &mut g.w_k);
    let gv_in = p.w_v.backward(fs, &gv, ts, &mut g.w_v);
    let g_fs = gk_in.iter().zip(&gv_in).map(|(a, b)| a + b).collect();
    (g_fi, g_fs)
}

/// Gradient of `sum(g_out * fusion_forward(fi, fs))` with respect to the
/// inputs and all weights.
pub fn fusion_backward(fi: &Tensor, fs: &Tensor, params: &FusionParams, g_out: &Tensor) -> Result<FusionGrad> {
    params.validate()?;
    let d = params.d_model;
    let t = tokens(fi, d, "F_I")?;
    let ts = tokens(fs, d, "F_S")?;
    if g_out.shape() != fi.shape() {
        return Err(Error::shape("output gradient must match F_I"));
    }
    let gu = g_out.data();
    let att = attention_raw(fi.data(), t, fs.data(), ts, params);
    let (pooled, film) = film_raw(fs.data(), ts, params);
    let mut g = FusionGrad {
        fi: gu.to_vec(),
        fs: vec![0.0; ts * d],
        w_q: LinearGrad::zeros(&params.w_q),
        w_k: LinearGrad::zeros(&params.w_k),
        w_v: LinearGrad::zeros(&params.w_v),
        w_o: LinearGrad::zeros(&params.w_o),
        w_film: LinearGrad::zeros(&params.w_film),
    };
    let mut g_o = vec![0.0; t * d];
    let mut g_film = vec![0.0; 3 * d];
    for i in 0..t {
        for ch in 0..d {
            let idx = i * d + ch;
            let (gv, o) = (gu[idx], att.out[idx]);
            g_o[idx] = gv * film.alpha[ch] * (1.0 + film.gamma[ch]);
            g_film[ch] += gv * film.alpha[ch] * o;
            g_film[d + ch] += gv * film.alpha[ch];
            g_film[2 * d + ch] += gv * (o * (1.0 + film.gamma[ch]) + film.beta[ch]);
        }
    }
    let (g_fi_att, g_fs_att) = attention_backward(fi.data(), t, fs.data(), ts, params, &att, &g_o, &mut g);
    for (a, b) in g.fi.iter_mut().zip(&g_fi_att) {
        *a += b;
    }
    let g_pooled = params.w_film.backward(&pooled, &g_film, 1, &mut g.w_film);
    for j in 0..ts {
        for ch in 0..d {
            g.fs[j * d + ch] = g_fs_att[j * d + ch] + g_pooled[ch] / ts as f64;
        }
    }
    Ok(g)
}

/// Gradient of `sum(g_out * cross_attention(fi, fs).output)`.
pub fn cross_attention_backward(fi: &Tensor, fs: &Tensor, params: &FusionParams, g_out: &Tensor) -> Result<FusionGrad> {
    params.validate()?;
    let d = params.d_model;
    let t = tokens(fi, d, "F_I")?;
    let ts = tokens(fs, d, "F_S")?;
    if g_out.shape() != fi.shape() {
        return Err(Error::shape("output gradient must match F_I"));
    }
    let att = attention_raw(fi.data(), t, fs.data(), ts, params);
    let mut g = FusionGrad {
        fi: Vec::new(),
        fs: Vec::new(),
        w_q: LinearGrad::zeros(&params.w_q),
        w_k: LinearGrad::zeros(&params.w_k),
        w_v: LinearGrad::zeros(&params.w_v),
        w_o: LinearGrad::zeros(&params.w_o),
        w_film: LinearGrad::zeros(&params.w_film),
    };
    let (g_fi, g_fs) = attention_backward(fi.data(), t, fs.data(), ts, params, &att, g_out.data(), &mut g);
    g.fi = g_fi;
    g.fs = g_fs;
    Ok(g)
}

/// Gradient of `sum(g . concat(gamma, beta, alpha))` with respect to `fs`
/// and the FiLM weights (other weight gradients stay zero).
pub fn film_backward(fs: &Tensor, params: &FusionParams, g_film: &[f64]) -> Result<FusionGrad> {
    params.validate()?;
    let d = params.d_model;
    let ts = tokens(fs, d, "F_S")?;
    if g_film.len() != 3 * d {
        return Err(Error::shape("FiLM gradient must have 3 * d_model entries"));
    }
    let (pooled, _) = film_raw(fs.data(), ts, params);
    let mut g = FusionGrad {
        fi: Vec::new(),
        fs: vec![0.0; ts * d],
        w_q: LinearGrad::zeros(&params.w_q),
        w_k: LinearGrad::zeros(&params.w_k),
        w_v: LinearGrad::zeros(&params.w_v),
        w_o: LinearGrad::zeros(&params.w_o),
        w_film: LinearGrad::zeros(&params.w_film),
    };
    let g_pooled = params.w_film.backward(&pooled, g_film, 1, &mut g.w_film);
    for j in 0..ts {
        for ch in 0..d {
            g.fs[j * d + ch] = g_pooled[ch] / ts as f64;
        }
    }
    Ok(g)
}
