//! Central finite-difference verification of analytic gradients.
//!
//! A target exposes a flat parameter point, a forward map to outputs and the
//! analytic gradient of the sum of outputs. Errors are measured with
//! `rel(a, b) = |a - b| / max(1, |a|, |b|)`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::adapter::{
    adapter_backward, adapter_forward, adapter_pipeline, adapter_pipeline_backward, highpass_adjoint, highpass_fft,
    patch_embed, patch_embed_backward, AdapterParams,
};
use super::fusion::{cross_attention, cross_attention_backward, film_backward, film_gate, fusion_backward, fusion_forward, FusionParams};
use super::linear::{Linear, LinearGrad};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::losses::{
    adaptive_focal_loss_with_gamma_a, bce_dice, boundary_f1, focal_loss, gamma_a, loss_gradient, LossConfig, LossId,
};
use crate::raster::{BinaryMask, ProbMap};
use crate::rng::Stream;

/// Something whose gradient can be checked numerically.
pub trait GradTarget {
    fn name(&self) -> &str;
    /// Current flat point (inputs followed by parameters).
    fn point(&self) -> Vec<f64>;
    /// Human-readable name of every point coordinate.
    fn labels(&self) -> Vec<String>;
    /// Outputs at `x`.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Analytic gradient of `sum(forward(x))`.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Outcome of one gradient check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradReport {
    pub op: String,
    pub max_rel_err: f64,
    /// Coordinate with the largest error, or where a non-finite value appeared.
    pub worst: Option<String>,
    pub checked: usize,
    pub tol: f64,
    pub pass: bool,
    pub failure: Option<String>,
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Compare the analytic gradient with central differences of step `h` on every
/// coordinate.
pub fn grad_check(target: &dyn GradTarget, h: f64, tol: f64) -> Result<GradReport> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::param(format!("step h must lie in [1e-6, 1e-3], got {h}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param("tolerance must be positive"));
    }
    let x0 = target.point();
    let labels = target.labels();
    let analytic = target.gradient(&x0)?;
    if analytic.len() != x0.len() || labels.len() != x0.len() {
        return Err(Error::shape("gradient, labels and point must have equal length"));
    }
    let mut report = GradReport {
        op: target.name().to_owned(),
        max_rel_err: 0.0,
        worst: None,
        checked: 0,
        tol,
        pass: true,
        failure: None,
    };
    let mut x = x0.clone();
    for i in 0..x0.len() {
        x[i] = x0[i] + h;
        let up: f64 = target.forward(&x)?.iter().sum();
        x[i] = x0[i] - h;
        let dn: f64 = target.forward(&x)?.iter().sum();
        x[i] = x0[i];
        let numeric = (up - dn) / (2.0 * h);
        report.checked += 1;
        if !numeric.is_finite() || !analytic[i].is_finite() {
            report.pass = false;
            report.max_rel_err = f64::INFINITY;
            report.worst = Some(labels[i].clone());
            report.failure = Some(format!("non-finite gradient at {}", labels[i]));
            return Ok(report);
        }
        let e = rel_err(analytic[i], numeric);
        if e > report.max_rel_err || report.worst.is_none() {
            report.max_rel_err = e;
            report.worst = Some(labels[i].clone());
        }
    }
    report.pass = report.max_rel_err < tol;
    Ok(report)
}

/// Operations with a ready-made check target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradOp {
    Linear,
    Attention,
    Film,
    Fusion,
    Highpass,
    PatchEmbed,
    Adapter,
    AdapterPipeline,
    Loss(LossId),
}

impl GradOp {
    pub const ALL: [GradOp; 14] = [
        GradOp::Linear,
        GradOp::Attention,
        GradOp::Film,
        GradOp::Fusion,
        GradOp::Highpass,
        GradOp::PatchEmbed,
        GradOp::Adapter,
        GradOp::AdapterPipeline,
        GradOp::Loss(LossId::Bce),
        GradOp::Loss(LossId::Dice),
        GradOp::Loss(LossId::Focal),
        GradOp::Loss(LossId::AdaptiveFocal),
        GradOp::Loss(LossId::Boundary),
        GradOp::Loss(LossId::Total),
    ];

    pub fn name(self) -> &'static str {
        match self {
            GradOp::Linear => "linear",
            GradOp::Attention => "attention",
            GradOp::Film => "film",
            GradOp::Fusion => "fusion",
            GradOp::Highpass => "highpass",
            GradOp::PatchEmbed => "patch-embed",
            GradOp::Adapter => "adapter",
            GradOp::AdapterPipeline => "adapter-pipeline",
            GradOp::Loss(id) => id.name(),
        }
    }
}

impl FromStr for GradOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GradOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::param(format!("unknown gradcheck target `{s}`")))
    }
}

/// Sizes of the randomly drawn check instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradDims {
    pub d_model: usize,
    pub n_heads: usize,
    pub tokens: usize,
    pub kv_tokens: usize,
    /// Side of square images (adapter targets) and loss maps.
    pub image: usize,
    pub patch: usize,
    pub tau: f64,
}

impl Default for GradDims {
    fn default() -> Self {
        Self { d_model: 8, n_heads: 2, tokens: 5, kv_tokens: 4, image: 8, patch: 2, tau: 0.25 }
    }
}

fn labelled(prefix: &str, n: usize, out: &mut Vec<String>) {
    out.extend((0..n).map(|i| format!("{prefix}[{i}]")));
}

fn linear_labels(name: &str, l: &Linear, out: &mut Vec<String>) {
    labelled(&format!("{name}.w"), l.w.len(), out);
    labelled(&format!("{name}.b"), l.b.len(), out);
}

fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

struct LinearTarget {
    layer: Linear,
    x: Tensor,
}

impl GradTarget for LinearTarget {
    fn name(&self) -> &str {
        "linear"
    }
    fn point(&self) -> Vec<f64> {
        let mut p = self.x.data().to_vec();
        self.layer.flatten_into(&mut p);
        p
    }
    fn labels(&self) -> Vec<String> {
        let mut l = Vec::new();
        labelled("x", self.x.data().len(), &mut l);
        linear_labels("layer", &self.layer, &mut l);
        l
    }
    fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.x.data().len();
        let mut layer = self.layer.clone();
        layer.load_from(&p[n..]);
        Ok(layer.forward(&Tensor::new(self.x.shape().to_vec(), p[..n].to_vec())?)?.into_data())
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.x.data().len();
        let mut layer = self.layer.clone();
        layer.load_from(&p[n..]);
        let rows = self.x.shape()[0];
        let mut g = LinearGrad::zeros(&layer);
        let mut out = layer.backward(&p[..n], &ones(rows * layer.n_out), rows, &mut g);
        g.flatten_into(&mut out);
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum FusionPart {
    Attention,
    Film,
    Fusion,
}

struct FusionTarget {
    part: FusionPart,
    params: FusionParams,
    fi: Tensor,
    fs: Tensor,
}

impl FusionTarget {
    fn unpack(&self, p: &[f64]) -> Result<(Tensor, Tensor, FusionParams)> {
        let (ni, ns) = (self.fi.data().len(), self.fs.data().len());
        let fi = Tensor::new(self.fi.shape().to_vec(), p[..ni].to_vec())?;
        let fs = Tensor::new(self.fs.shape().to_vec(), p[ni..ni + ns].to_vec())?;
        let mut params = self.params.clone();
        params.load(&p[ni + ns..]);
        Ok((fi, fs, params))
    }
}

impl GradTarget for FusionTarget {
    fn name(&self) -> &str {
        match self.part {
            FusionPart::Attention => "attention",
            FusionPart::Film => "film",
            FusionPart::Fusion => "fusion",
        }
    }
    fn point(&self) -> Vec<f64> {
        let mut p = self.fi.data().to_vec();
        p.extend_from_slice(self.fs.data());
        p.extend(self.params.flatten());
        p
    }
    fn labels(&self) -> Vec<String> {
        let mut l = Vec::new();
        labelled("F_I", self.fi.data().len(), &mut l);
        labelled("F_S", self.fs.data().len(), &mut l);
        let p = &self.params;
        for (n, layer) in [("W_q", &p.w_q), ("W_k", &p.w_k), ("W_v", &p.w_v), ("W_o", &p.w_o), ("W_film", &p.w_film)] {
            linear_labels(n, layer, &mut l);
        }
        l
    }
    fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (fi, fs, params) = self.unpack(p)?;
        Ok(match self.part {
            FusionPart::Attention => cross_attention(&fi, &fs, &params)?.output.into_data(),
            FusionPart::Film => {
                let f = film_gate(&fs, &params)?;
                [f.gamma, f.beta, f.alpha].concat()
            }
            FusionPart::Fusion => fusion_forward(&fi, &fs, &params)?.into_data(),
        })
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (fi, fs, params) = self.unpack(p)?;
        let g_tokens = Tensor::new(fi.shape().to_vec(), ones(fi.data().len()))?;
        let g = match self.part {
            FusionPart::Attention => cross_attention_backward(&fi, &fs, &params, &g_tokens)?,
            FusionPart::Film => {
                let mut g = film_backward(&fs, &params, &ones(3 * params.d_model))?;
                g.fi = vec![0.0; fi.data().len()];
                g
            }
            FusionPart::Fusion => fusion_backward(&fi, &fs, &params, &g_tokens)?,
        };
        let mut out = g.fi.clone();
        out.extend_from_slice(&g.fs);
        out.extend(g.flatten_params());
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum AdapterPart {
    Highpass,
    PatchEmbed,
    Adapter,
    Pipeline,
}

struct AdapterTarget {
    part: AdapterPart,
    params: AdapterParams,
    /// Image for image-level parts; `F_hfc` for the token-level adapter.
    input: Tensor,
    /// `F_hpe` for the token-level adapter.
    hpe: Tensor,
}

impl AdapterTarget {
    fn input_len(&self) -> usize {
        match self.part {
            AdapterPart::Adapter => self.input.data().len() + self.hpe.data().len(),
            _ => self.input.data().len(),
        }
    }

    fn has_params(&self) -> bool {
        !matches!(self.part, AdapterPart::Highpass)
    }

    fn unpack(&self, p: &[f64]) -> Result<(Tensor, Tensor, AdapterParams)> {
        let n = self.input.data().len();
        let input = Tensor::new(self.input.shape().to_vec(), p[..n].to_vec())?;
        let hpe = if matches!(self.part, AdapterPart::Adapter) {
            Tensor::new(self.hpe.shape().to_vec(), p[n..2 * n].to_vec())?
        } else {
            self.hpe.clone()
        };
        let mut params = self.params.clone();
        if self.has_params() {
            params.load(&p[self.input_len()..]);
        }
        Ok((input, hpe, params))
    }
}

impl GradTarget for AdapterTarget {
    fn name(&self) -> &str {
        match self.part {
            AdapterPart::Highpass => "highpass",
            AdapterPart::PatchEmbed => "patch-embed",
            AdapterPart::Adapter => "adapter",
            AdapterPart::Pipeline => "adapter-pipeline",
        }
    }
    fn point(&self) -> Vec<f64> {
        let mut p = self.input.data().to_vec();
        if matches!(self.part, AdapterPart::Adapter) {
            p.extend_from_slice(self.hpe.data());
        }
        if self.has_params() {
            p.extend(self.params.flatten());
        }
        p
    }
    fn labels(&self) -> Vec<String> {
        let mut l = Vec::new();
        match self.part {
            AdapterPart::Adapter => {
                labelled("F_hfc", self.input.data().len(), &mut l);
                labelled("F_hpe", self.hpe.data().len(), &mut l);
            }
            _ => labelled("image", self.input.data().len(), &mut l),
        }
        if self.has_params() {
            let p = &self.params;
            for (n, layer) in [("W_pe", &p.w_pe), ("W_mlp", &p.w_mlp), ("W_up", &p.w_up)] {
                linear_labels(n, layer, &mut l);
            }
        }
        l
    }
    fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (input, hpe, params) = self.unpack(p)?;
        Ok(match self.part {
            AdapterPart::Highpass => highpass_fft(&input, params.tau)?,
            AdapterPart::PatchEmbed => patch_embed(&input, &params)?,
            AdapterPart::Adapter => adapter_forward(&input, &hpe, &params)?,
            AdapterPart::Pipeline => adapter_pipeline(&input, &params)?,
        }
        .into_data())
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let (input, hpe, params) = self.unpack(p)?;
        if let AdapterPart::Highpass = self.part {
            let g = Tensor::new(input.shape().to_vec(), ones(input.data().len()))?;
            return Ok(highpass_adjoint(&g, params.tau)?.into_data());
        }
        let d = params.d_model();
        let tokens_g = |t: usize| Tensor::new(vec![t, d], ones(t * d));
        let g = match self.part {
            AdapterPart::PatchEmbed => {
                let t = patch_embed(&input, &params)?.shape()[0];
                patch_embed_backward(&input, &params, &tokens_g(t)?)?
            }
            AdapterPart::Adapter => {
                let t = input.shape()[0];
                let mut g = adapter_backward(&input, &hpe, &params, &tokens_g(t)?)?;
                let h = std::mem::take(&mut g.hpe);
                g.input.extend(h);
                g
            }
            AdapterPart::Pipeline => {
                let t = patch_embed(&input, &params)?.shape()[0];
                adapter_pipeline_backward(&input, &params, &tokens_g(t)?)?
            }
            AdapterPart::Highpass => unreachable!("handled above"),
        };
        let mut out = g.input.clone();
        out.extend(g.flatten_params());
        Ok(out)
    }
}

struct LossTarget {
    id: LossId,
    config: LossConfig,
    pred: ProbMap,
    gt: BinaryMask,
    /// Held fixed while differencing.
    gamma_a: f64,
}

impl LossTarget {
    fn pred_at(&self, p: &[f64]) -> Result<ProbMap> {
        ProbMap::new(self.pred.height(), self.pred.width(), p.to_vec())
    }
}

impl GradTarget for LossTarget {
    fn name(&self) -> &str {
        self.id.name()
    }
    fn point(&self) -> Vec<f64> {
        self.pred.data().to_vec()
    }
    fn labels(&self) -> Vec<String> {
        let w = self.pred.width();
        (0..self.pred.data().len()).map(|i| format!("pred[{},{}]", i / w, i % w)).collect()
    }
    fn forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        let pred = self.pred_at(p)?;
        let (gt, c) = (&self.gt, &self.config);
        let afl = |pred: &ProbMap| adaptive_focal_loss_with_gamma_a(pred, gt, c.gamma, c.alpha, self.gamma_a, c.eps);
        let v = match self.id {
            LossId::Bce => bce_dice(&pred, gt, c.eps)?.bce,
            LossId::Dice => bce_dice(&pred, gt, c.eps)?.dice,
            LossId::Focal => focal_loss(&pred, gt, c.gamma, c.eps)?.sum,
            LossId::AdaptiveFocal => afl(&pred)?,
            LossId::Boundary => boundary_f1(&pred, gt, c.theta1, c.theta2)?.loss,
            LossId::Total => {
                let bd = bce_dice(&pred, gt, c.eps)?;
                let b = boundary_f1(&pred, gt, c.theta1, c.theta2)?.loss;
                c.lambda_mask * bd.bce + c.lambda_dice * bd.dice + c.lambda_adaptive * afl(&pred)? + c.lambda_boundary * b
            }
        };
        Ok(vec![v])
    }
    fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let pred = self.pred_at(p)?;
        Ok(loss_gradient(&pred, &self.gt, &self.config, self.id)?.data)
    }
}

/// Random check instance for `op` drawn from `seed`.
pub fn make_target(op: GradOp, seed: u64, dims: &GradDims) -> Result<Box<dyn GradTarget>> {
    let mut rng = Stream::new(seed);
    let d = dims.d_model;
    let params_seed = rng.next_u64();
    Ok(match op {
        GradOp::Linear => {
            let layer = Linear::random(d, d + 1, &mut rng);
            let x = Tensor::random(vec![dims.tokens, d], -1.0, 1.0, &mut rng);
            Box::new(LinearTarget { layer, x })
        }
        GradOp::Attention | GradOp::Film | GradOp::Fusion => {
            let mut params = FusionParams::random(d, dims.n_heads, params_seed)?;
            // Push the gate away from zero so every path carries gradient.
            for b in params.w_film.b.iter_mut() {
                *b += 0.5;
            }
            let fi = Tensor::random(vec![dims.tokens, d], -1.0, 1.0, &mut rng);
            let fs = Tensor::random(vec![dims.kv_tokens, d], -1.0, 1.0, &mut rng);
            let part = match op {
                GradOp::Attention => FusionPart::Attention,
                GradOp::Film => FusionPart::Film,
                _ => FusionPart::Fusion,
            };
            Box::new(FusionTarget { part, params, fi, fs })
        }
        GradOp::Highpass | GradOp::PatchEmbed | GradOp::Adapter | GradOp::AdapterPipeline => {
            let params = AdapterParams::random(d, dims.patch, dims.tau, params_seed)?;
            let n = dims.image;
            let t = (n / dims.patch.max(1)).pow(2);
            let (part, input, hpe) = match op {
                GradOp::Adapter => (
                    AdapterPart::Adapter,
                    Tensor::random(vec![t, d], -1.0, 1.0, &mut rng),
                    Tensor::random(vec![t, d], -1.0, 1.0, &mut rng),
                ),
                other => {
                    let part = match other {
                        GradOp::Highpass => AdapterPart::Highpass,
                        GradOp::PatchEmbed => AdapterPart::PatchEmbed,
                        _ => AdapterPart::Pipeline,
                    };
                    (part, Tensor::random(vec![n, n], 0.0, 1.0, &mut rng), Tensor::zeros(vec![0]))
                }
            };
            Box::new(AdapterTarget { part, params, input, hpe })
        }
        GradOp::Loss(id) => {
            let n = dims.image;
            let pred = ProbMap::new(n, n, (0..n * n).map(|_| rng.uniform(0.05, 0.95)).collect())?;
            let gt = BinaryMask::new(n, n, (0..n * n).map(|_| rng.unit() < 0.4).collect())?;
            let config = LossConfig::default();
            let ga = gamma_a(&pred, &gt, config.eps)?.unwrap_or(0.0);
            Box::new(LossTarget { id, config, pred, gt, gamma_a: ga })
        }
    })
}
