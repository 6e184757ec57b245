//! High-frequency extraction, patch embedding and the bottleneck adapter
//! `F'_I = up(GELU(mlp(F_hfc + F_hpe)))`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::linear::{Linear, LinearGrad};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Weights of the adapter block. `w_pe` embeds both the image and its
/// high-pass component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdapterParams {
    pub tau: f64,
    pub patch: usize,
    /// `patch^2 -> d`.
    pub w_pe: Linear,
    /// `d -> hidden`.
    pub w_mlp: Linear,
    /// `hidden -> d`.
    pub w_up: Linear,
}

impl AdapterParams {
    /// Seeded weights uniform in `[-0.1, 0.1)`; hidden width `max(1, d / 4)`.
    pub fn random(d_model: usize, patch: usize, tau: f64, seed: u64) -> Result<Self> {
        if d_model == 0 || patch == 0 {
            return Err(Error::param("d_model and patch must be positive"));
        }
        let hidden = (d_model / 4).max(1);
        let mut rng = Stream::new(seed);
        let w_pe = Linear::random(patch * patch, d_model, &mut rng);
        let w_mlp = Linear::random(d_model, hidden, &mut rng);
        let w_up = Linear::random(hidden, d_model, &mut rng);
        let p = Self { tau, patch, w_pe, w_mlp, w_up };
        p.validate()?;
        Ok(p)
    }

    pub fn d_model(&self) -> usize {
        self.w_pe.n_out
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        let d = self.w_pe.n_out;
        if self.patch == 0 || self.w_pe.n_in != self.patch * self.patch {
            return Err(Error::shape("w_pe must take patch^2 inputs"));
        }
        if self.w_mlp.n_in != d || self.w_up.n_in != self.w_mlp.n_out || self.w_up.n_out != d {
            return Err(Error::shape("adapter layers must map d -> hidden -> d"));
        }
        Ok(())
    }

    fn layers(&self) -> [&Linear; 3] {
        [&self.w_pe, &self.w_mlp, &self.w_up]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// All weights in the order pe, mlp, up (each `w` then `b`).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            l.flatten_into(&mut out);
        }
        out
    }

    pub fn load(&mut self, src: &[f64]) {
        let mut at = self.w_pe.load_from(src);
        at += self.w_mlp.load_from(&src[at..]);
        self.w_up.load_from(&src[at..]);
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::param(format!("tau must lie in [0, 1), got {tau}")));
    }
    Ok(())
}

/// Row-then-column 2-D FFT in place. `inverse` is unnormalised.
fn fft2(buf: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| -> Arc<dyn Fft<f64>> {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    let row_fft = plan(w, &mut planner);
    for row in buf.chunks_mut(w) {
        row_fft.process(row);
    }
    let col_fft = plan(h, &mut planner);
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
}

/// Side of the zeroed low-frequency square.
pub fn highpass_side(h: usize, w: usize, tau: f64) -> usize {
    (tau * h.min(w) as f64).ceil() as usize
}

/// Whether unshifted frequency index `k` of an `n`-point axis falls inside
/// the centred band of width `side`.
fn in_band(k: usize, n: usize, side: usize) -> bool {
    // Shifted position of frequency k.
    let s = (k + n / 2) % n;
    s + side / 2 >= n / 2 && s < n / 2 - side / 2 + side
}

pub(crate) fn highpass_raw(img: &[f64], h: usize, w: usize, tau: f64) -> Vec<f64> {
    let side = highpass_side(h, w, tau);
    if side == 0 {
        return img.to_vec();
    }
    let mut buf: Vec<Complex64> = img.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, h, w, false);
    for ky in 0..h {
        if !in_band(ky, h, side) {
            continue;
        }
        for kx in 0..w {
            if in_band(kx, w, side) {
                buf[ky * w + kx] = Complex64::new(0.0, 0.0);
            }
        }
    }
    fft2(&mut buf, h, w, true);
    let norm = (h * w) as f64;
    buf.iter().map(|c| c.re / norm).collect()
}

fn image_dims(image: &Tensor) -> Result<(usize, usize)> {
    let (h, w) = image.dims2()?;
    if h == 0 || w == 0 {
        return Err(Error::shape("image must be non-empty"));
    }
    Ok((h, w))
}

/// Zero the centred low-frequency square of side `ceil(tau * min(H, W))` of
/// the 2-D spectrum and return the real part of the inverse transform.
pub fn highpass_fft(image: &Tensor, tau: f64) -> Result<Tensor> {
    check_tau(tau)?;
    let (h, w) = image_dims(image)?;
    Ok(Tensor::from_parts_unchecked(vec![h, w], highpass_raw(image.data(), h, w, tau)))
}

/// Adjoint of [`highpass_fft`]. The filter is a real, diagonal spectral mask
/// followed by taking the real part, so the operator is self-adjoint.
pub fn highpass_adjoint(grad: &Tensor, tau: f64) -> Result<Tensor> {
    highpass_fft(grad, tau)
}

fn patch_grid(h: usize, w: usize, p: usize) -> Result<(usize, usize)> {
    if p == 0 || !h.is_multiple_of(p) || !w.is_multiple_of(p) {
        return Err(Error::param(format!("patch {p} must divide image {h}x{w}")));
    }
    Ok((h / p, w / p))
}

/// Rearrange an image into `tokens x p^2` rows, patches row-major.
fn patches(img: &[f64], h: usize, w: usize, p: usize) -> Vec<f64> {
    let (gh, gw) = (h / p, w / p);
    let mut out = Vec::with_capacity(h * w);
    for py in 0..gh {
        for px in 0..gw {
            for y in 0..p {
                let start = (py * p + y) * w + px * p;
                out.extend_from_slice(&img[start..start + p]);
            }
        }
    }
    out
}

/// Inverse of [`patches`].
fn unpatch(rows: &[f64], h: usize, w: usize, p: usize) -> Vec<f64> {
    let (gh, gw) = (h / p, w / p);
    let mut img = vec![0.0; h * w];
    let mut k = 0;
    for py in 0..gh {
        for px in 0..gw {
            for y in 0..p {
                let start = (py * p + y) * w + px * p;
                img[start..start + p].copy_from_slice(&rows[k..k + p]);
                k += p;
            }
        }
    }
    img
}

/// Project non-overlapping `patch x patch` tiles, row-major over the grid.
pub fn patch_embed(image: &Tensor, params: &AdapterParams) -> Result<Tensor> {
    params.validate()?;
    let (h, w) = image_dims(image)?;
    let (gh, gw) = patch_grid(h, w, params.patch)?;
    let rows = patches(image.data(), h, w, params.patch);
    let t = gh * gw;
    Ok(Tensor::from_parts_unchecked(vec![t, params.d_model()], params.w_pe.apply(&rows, t)))
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Exact GELU, `x * Phi(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

/// `Phi(x) + x * phi(x)`.
pub fn gelu_derivative(x: f64) -> f64 {
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    0.5 * (1.0 + libm::erf(x / SQRT_2)) + x * pdf
}

struct AdapterCache {
    sum: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    out: Vec<f64>,
}

fn adapter_raw(hfc: &[f64], hpe: &[f64], t: usize, p: &AdapterParams) -> AdapterCache {
    let sum: Vec<f64> = hfc.iter().zip(hpe).map(|(a, b)| a + b).collect();
    let pre = p.w_mlp.apply(&sum, t);
    let hidden: Vec<f64> = pre.iter().map(|&v| gelu(v)).collect();
    let out = p.w_up.apply(&hidden, t);
    AdapterCache { sum, pre, hidden, out }
}

fn token_pair(hfc: &Tensor, hpe: &Tensor, d: usize) -> Result<usize> {
    let (t, c) = hfc.dims2()?;
    if c != d || hpe.shape() != hfc.shape() {
        return Err(Error::shape(format!("F_hfc and F_hpe must both be tokens x {d}")));
    }
    Ok(t)
}

/// `up(GELU(mlp(hfc + hpe)))`.
pub fn adapter_forward(hfc: &Tensor, hpe: &Tensor, params: &AdapterParams) -> Result<Tensor> {
    params.validate()?;
    let d = params.d_model();
    let t = token_pair(hfc, hpe, d)?;
    Ok(Tensor::from_parts_unchecked(vec![t, d], adapter_raw(hfc.data(), hpe.data(), t, params).out))
}

/// Gradients of a scalar with respect to adapter inputs and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterGrad {
    /// Gradient of the first input (`F_hfc`, or the image for the pipeline).
    pub input: Vec<f64>,
    /// Gradient of `F_hpe` (equal to `input` for the token-level adapter).
    pub hpe: Vec<f64>,
    pub w_pe: LinearGrad,
    pub w_mlp: LinearGrad,
    pub w_up: LinearGrad,
}

impl AdapterGrad {
    fn zeros(p: &AdapterParams) -> Self {
        Self {
            input: Vec::new(),
            hpe: Vec::new(),
            w_pe: LinearGrad::zeros(&p.w_pe),
            w_mlp: LinearGrad::zeros(&p.w_mlp),
            w_up: LinearGrad::zeros(&p.w_up),
        }
    }

    /// Parameter gradients in [`AdapterParams::flatten`] order.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in [&self.w_pe, &self.w_mlp, &self.w_up] {
            g.flatten_into(&mut out);
        }
        out
    }
}

fn adapter_backward_raw(c: &AdapterCache, t: usize, p: &AdapterParams, g_out: &[f64], g: &mut AdapterGrad) -> Vec<f64> {
    let g_hidden = p.w_up.backward(&c.hidden, g_out, t, &mut g.w_up);
    let g_pre: Vec<f64> = g_hidden.iter().zip(&c.pre).map(|(gh, &x)| gh * gelu_derivative(x)).collect();
    p.w_mlp.backward(&c.sum, &g_pre, t, &mut g.w_mlp)
}

/// Gradient of `sum(g_out * adapter_forward(hfc, hpe))`.
pub fn adapter_backward(hfc: &Tensor, hpe: &Tensor, params: &AdapterParams, g_out: &Tensor) -> Result<AdapterGrad> {
    params.validate()?;
    let d = params.d_model();
    let t = token_pair(hfc, hpe, d)?;
    if g_out.shape() != hfc.shape() {
        return Err(Error::shape("output gradient must match the token tensor"));
    }
    let c = adapter_raw(hfc.data(), hpe.data(), t, params);
    let mut g = AdapterGrad::zeros(params);
    let g_sum = adapter_backward_raw(&c, t, params, g_out.data(), &mut g);
    g.hpe = g_sum.clone();
    g.input = g_sum;
    Ok(g)
}

/// Gradient of `sum(g_out * patch_embed(image))`; `input` is the image gradient.
pub fn patch_embed_backward(image: &Tensor, params: &AdapterParams, g_out: &Tensor) -> Result<AdapterGrad> {
    params.validate()?;
    let (h, w) = image_dims(image)?;
    let (gh, gw) = patch_grid(h, w, params.patch)?;
    let t = gh * gw;
    if g_out.shape() != [t, params.d_model()] {
        return Err(Error::shape("output gradient must be tokens x d"));
    }
    let rows = patches(image.data(), h, w, params.patch);
    let mut g = AdapterGrad::zeros(params);
    let g_rows = params.w_pe.backward(&rows, g_out.data(), t, &mut g.w_pe);
    g.input = unpatch(&g_rows, h, w, params.patch);
    Ok(g)
}

/// Image-level adapter: `adapter(patch_embed(highpass(img)), patch_embed(img))`.
pub fn adapter_pipeline(image: &Tensor, params: &AdapterParams) -> Result<Tensor> {
    let hfc = patch_embed(&highpass_fft(image, params.tau)?, params)?;
    let hpe = patch_embed(image, params)?;
    adapter_forward(&hfc, &hpe, params)
}

/// Gradient of `sum(g_out * adapter_pipeline(image))`; `input` is the image
/// gradient and `w_pe` collects both embedding paths.
pub fn adapter_pipeline_backward(image: &Tensor, params: &AdapterParams, g_out: &Tensor) -> Result<AdapterGrad> {
    params.validate()?;
    let (h, w) = image_dims(image)?;
    let (gh, gw) = patch_grid(h, w, params.patch)?;
    let t = gh * gw;
    let d = params.d_model();
    if g_out.shape() != [t, d] {
        return Err(Error::shape("output gradient must be tokens x d"));
    }
    let hp = highpass_raw(image.data(), h, w, params.tau);
    let rows_hp = patches(&hp, h, w, params.patch);
    let rows_img = patches(image.data(), h, w, params.patch);
    let hfc = params.w_pe.apply(&rows_hp, t);
    let hpe = params.w_pe.apply(&rows_img, t);
    let c = adapter_raw(&hfc, &hpe, t, params);
    let mut g = AdapterGrad::zeros(params);
    let g_sum = adapter_backward_raw(&c, t, params, g_out.data(), &mut g);
    let g_rows_hp = params.w_pe.backward(&rows_hp, &g_sum, t, &mut g.w_pe);
    let g_rows_img = params.w_pe.backward(&rows_img, &g_sum, t, &mut g.w_pe);
    let g_hp = unpatch(&g_rows_hp, h, w, params.patch);
    let g_hp_img = highpass_raw(&g_hp, h, w, params.tau);
    let g_img = unpatch(&g_rows_img, h, w, params.patch);
    g.input = g_img.iter().zip(&g_hp_img).map(|(a, b)| a + b).collect();
    g.hpe = g_sum;
    Ok(g)
}
