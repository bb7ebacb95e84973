//! Masked mean-squared reconstruction loss.
//!
//! `L = (1 / (w·h)) · Σ_ij m_ij · mean_c (x̂_ijc − x_ijc)²`
//!
//! Pixels outside the mask contribute nothing. [`Normalization::MaskArea`]
//! divides by `Σ m` instead of `w·h`.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::image::{BinaryMask, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the image area `w·h`.
    #[default]
    ImageArea,
    /// Divide by the number of masked pixels.
    MaskArea,
}

impl Normalization {
    pub(crate) fn denominator(self, mask: &BinaryMask) -> f64 {
        match self {
            Normalization::ImageArea => (mask.width() * mask.height()) as f64,
            Normalization::MaskArea => mask.count_ones().max(1) as f64,
        }
    }
}

pub(crate) fn check_dims(x: &ImageTensor, recon: &ImageTensor, m: &BinaryMask) -> Result<(), ModelError> {
    x.check_same_shape(recon)?;
    if (x.width(), x.height()) != m.dims() {
        return Err(ModelError::DimensionMismatch(format!(
            "image {}x{} vs mask {}x{}",
            x.width(),
            x.height(),
            m.width(),
            m.height()
        )));
    }
    Ok(())
}

/// Loss over raw (possibly unclamped) reconstruction values laid out like
/// `x`.
pub(crate) fn masked_loss_raw(x: &[f64], recon: &[f64], m: &BinaryMask, channels: usize, norm: Normalization) -> f64 {
    let mut total = 0.0;
    for (p, &on) in m.data().iter().enumerate() {
        if !on {
            continue;
        }
        let base = p * channels;
        let sq: f64 = (0..channels).map(|c| (recon[base + c] - x[base + c]).powi(2)).sum();
        total += sq / channels as f64;
    }
    total / norm.denominator(m)
}

/// `∂L/∂x̂ = 2·m·(x̂ − x) / (w·h·C)`
pub(crate) fn masked_loss_gradient_raw(
    x: &[f64],
    recon: &[f64],
    m: &BinaryMask,
    channels: usize,
    norm: Normalization,
) -> Vec<f64> {
    let scale = 2.0 / (norm.denominator(m) * channels as f64);
    let mut g = vec![0.0; x.len()];
    for (p, &on) in m.data().iter().enumerate() {
        if !on {
            continue;
        }
        for c in 0..channels {
            let i = p * channels + c;
            g[i] = scale * (recon[i] - x[i]);
        }
    }
    g
}

pub fn masked_loss(x: &ImageTensor, recon: &ImageTensor, m: &BinaryMask) -> Result<f64, ModelError> {
    masked_loss_with(x, recon, m, Normalization::ImageArea)
}

pub fn masked_loss_with(x: &ImageTensor, recon: &ImageTensor, m: &BinaryMask, norm: Normalization) -> Result<f64, ModelError> {
    check_dims(x, recon, m)?;
    Ok(masked_loss_raw(x.data(), recon.data(), m, x.channels(), norm))
}

/// Gradient of [`masked_loss`] with respect to every reconstruction value,
/// laid out like the image data.
pub fn masked_loss_gradient(x: &ImageTensor, recon: &ImageTensor, m: &BinaryMask) -> Result<Vec<f64>, ModelError> {
    masked_loss_gradient_with(x, recon, m, Normalization::ImageArea)
}

pub fn masked_loss_gradient_with(
    x: &ImageTensor,
    recon: &ImageTensor,
    m: &BinaryMask,
    norm: Normalization,
) -> Result<Vec<f64>, ModelError> {
    check_dims(x, recon, m)?;
    Ok(masked_loss_gradient_raw(x.data(), recon.data(), m, x.channels(), norm))
}
