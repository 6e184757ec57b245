use serde::Serialize;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Dense layer `y = x W + b` with `W` stored row-major as `[n_in][n_out]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linear {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Gradients of a [`Linear`] layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearGrad {
    pub fn zeros(layer: &Linear) -> Self {
        Self { w: vec![0.0; layer.w.len()], b: vec![0.0; layer.b.len()] }
    }
}

/// Initialisation range for seeded weights.
pub const INIT_RANGE: f64 = 0.1;

impl Linear {
    pub fn new(n_in: usize, n_out: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::param("layer dimensions must be positive"));
        }
        if w.len() != n_in * n_out || b.len() != n_out {
            return Err(Error::shape(format!("{n_in}x{n_out} layer got {} weights, {} biases", w.len(), b.len())));
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite layer weight"));
        }
        Ok(Self { n_in, n_out, w, b })
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, w: vec![0.0; n_in * n_out], b: vec![0.0; n_out] }
    }

    /// Weights and biases uniform in `[-INIT_RANGE, INIT_RANGE)`.
    pub fn random(n_in: usize, n_out: usize, rng: &mut Stream) -> Self {
        let w = (0..n_in * n_out).map(|_| rng.uniform(-INIT_RANGE, INIT_RANGE)).collect();
        let b = (0..n_out).map(|_| rng.uniform(-INIT_RANGE, INIT_RANGE)).collect();
        Self { n_in, n_out, w, b }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (rows, cols) = x.dims2()?;
        if cols != self.n_in {
            return Err(Error::shape(format!("layer expects {} inputs, got {cols}", self.n_in)));
        }
        Ok(Tensor::from_parts_unchecked(vec![rows, self.n_out], self.apply(x.data(), rows)))
    }

    /// Raw-slice forward over `rows` input rows.
    pub(crate) fn apply(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(rows * self.n_out);
        for r in 0..rows {
            y.extend_from_slice(&self.b);
            let out = &mut y[r * self.n_out..];
            for (i, &xv) in x[r * self.n_in..(r + 1) * self.n_in].iter().enumerate() {
                let wrow = &self.w[i * self.n_out..(i + 1) * self.n_out];
                for (o, &wv) in out.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
        y
    }

    /// Accumulate parameter gradients into `grad` and return the input gradient.
    pub(crate) fn backward(&self, x: &[f64], gy: &[f64], rows: usize, grad: &mut LinearGrad) -> Vec<f64> {
        let mut gx = vec![0.0; rows * self.n_in];
        for r in 0..rows {
            let g = &gy[r * self.n_out..(r + 1) * self.n_out];
            for (gb, &gv) in grad.b.iter_mut().zip(g) {
                *gb += gv;
            }
            for i in 0..self.n_in {
                let xv = x[r * self.n_in + i];
                let wrow = &self.w[i * self.n_out..(i + 1) * self.n_out];
                let gwrow = &mut grad.w[i * self.n_out..(i + 1) * self.n_out];
                let mut acc = 0.0;
                for o in 0..self.n_out {
                    gwrow[o] += xv * g[o];
                    acc += wrow[o] * g[o];
                }
                gx[r * self.n_in + i] = acc;
            }
        }
        gx
    }

    pub(crate) fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b);
    }

    pub(crate) fn load_from(&mut self, src: &[f64]) -> usize {
        let (nw, nb) = (self.w.len(), self.b.len());
        self.w.copy_from_slice(&src[..nw]);
        self.b.copy_from_slice(&src[nw..nw + nb]);
        nw + nb
    }
}

impl LinearGrad {
    pub(crate) fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b);
    }
}
