//! Toy-scale forward and backward passes for the sketch/image fusion block
//! and the high-frequency adapter, plus finite-difference gradient checks.
//!
//! Token tensors are `tokens x d_model`, row-major. Dense layers compute
//! `y = x W + b`.

mod adapter;
mod fusion;
mod gradcheck;
mod linear;
mod readout;
mod tensor;

pub use adapter::{
    adapter_backward, adapter_forward, adapter_pipeline, adapter_pipeline_backward, gelu, gelu_derivative,
    highpass_adjoint, highpass_fft, highpass_side, patch_embed, patch_embed_backward, AdapterGrad, AdapterParams,
};
pub use fusion::{
    cross_attention, cross_attention_backward, film_backward, film_gate, fusion_backward, fusion_forward, Attention,
    Film, FusionGrad, FusionParams,
};
pub use gradcheck::{grad_check, make_target, rel_err, GradDims, GradOp, GradReport, GradTarget};
pub use linear::{Linear, LinearGrad, INIT_RANGE};
pub use readout::mask_readout;
pub use tensor::Tensor;
