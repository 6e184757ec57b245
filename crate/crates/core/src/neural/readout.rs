use super::linear::Linear;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// Stand-in for a mask decoder: one linear logit per token, thresholded at 0
/// and laid out on the `grid_h x grid_w` token grid.
pub fn mask_readout(tokens: &Tensor, readout: &Linear, grid_h: usize, grid_w: usize) -> Result<BinaryMask> {
    if readout.n_out != 1 {
        return Err(Error::shape("readout must produce one logit per token"));
    }
    let logits = readout.forward(tokens)?;
    if logits.data().len() != grid_h * grid_w {
        return Err(Error::shape(format!("{} tokens do not fill a {grid_h}x{grid_w} grid", logits.data().len())));
    }
    BinaryMask::new(grid_h, grid_w, logits.data().iter().map(|&v| v > 0.0).collect())
}
