//! Physically aligned normalization.
//!
//! Three closed-form stages:
//!
//! 1. Gray-world color normalization: every channel is rescaled so that its
//!    mean matches the global mean, `I_norm = I · E[I] / (E_c[I] + ε)`.
//! 2. Log-domain Retinex split: the shading estimate is the per-channel
//!    spatial mean of `log(I_norm + ε)`; the reflectance is the residual.
//! 3. Recombination: `R̂ ⊗ Ŝ` is min-max rescaled with one affine map over all
//!    channels jointly.
//!
//! An optional local gain `G(x) = E[I] / (E_Ω(x)[I] + ε)` can be applied
//! between stages 1 and 2.

use crate::image::{compute_stats, Image, CHANNELS};
use crate::numeric;
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_LOCAL_RADIUS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum PanError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("local window radius must be at least 1")]
    InvalidRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PanConfig {
    pub epsilon: f64,
    pub enable_local_gain: bool,
    pub local_window_radius: usize,
}

impl Default for PanConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            enable_local_gain: false,
            local_window_radius: DEFAULT_LOCAL_RADIUS,
        }
    }
}

impl PanConfig {
    pub fn validate(&self) -> Result<(), PanError> {
        check_epsilon(self.epsilon)?;
        if self.local_window_radius < 1 {
            return Err(PanError::InvalidRadius);
        }
        Ok(())
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), PanError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(PanError::InvalidEpsilon(epsilon))
    }
}

/// Reflectance and per-channel shading from the log-domain split.
///
/// `reflectance ⊗ shading` reproduces `I_norm + ε` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationDecomposition {
    pub reflectance: Image,
    pub shading: [f64; 3],
    pub epsilon: f64,
}

impl IlluminationDecomposition {
    /// `R̂ ⊗ Ŝ`, i.e. the decomposed image before rescaling.
    pub fn product(&self) -> Image {
        self.reflectance.scale_channels(self.shading)
    }
}

/// Gray-world normalization, `I · E[I] / (E_c[I] + ε)`.
pub fn gray_world_normalize(image: &Image, epsilon: f64) -> Result<Image, PanError> {
    check_epsilon(epsilon)?;
    let stats = compute_stats(image);
    let gain = stats
        .per_channel_mean
        .map(|m| stats.global_mean / (m + epsilon));
    Ok(image.scale_channels(gain))
}

/// Split `normalized` into per-channel shading `Ŝ_c = exp(mean log(I_c + ε))`
/// and reflectance `R̂ = exp(log(I + ε) − log Ŝ)`.
///
/// Inputs must satisfy `I + ε > 0`, which holds for every gray-world output
/// of a non-negative image.
pub fn retinex_decompose(
    normalized: &Image,
    epsilon: f64,
) -> Result<IlluminationDecomposition, PanError> {
    check_epsilon(epsilon)?;
    let logs = normalized.map(|v| (v + epsilon).ln());
    let mut log_shading = [0.0; 3];
    for (c, ls) in log_shading.iter_mut().enumerate() {
        *ls = numeric::mean(logs.channel(c));
    }
    let reflectance = logs.map_channels(|l, c| (l - log_shading[c]).exp());
    Ok(IlluminationDecomposition {
        reflectance,
        shading: log_shading.map(f64::exp),
        epsilon,
    })
}

/// Global min-max rescale `(P − min P) / (max P − min P + ε)`.
///
/// One affine map over all channels; a constant input maps to zeros.
pub fn minmax_rescale(product: &Image, epsilon: f64) -> Image {
    let stats = compute_stats(product);
    let (lo, hi) = (stats.global_min, stats.global_max);
    let denom = hi - lo + epsilon;
    product.map(|p| (p - lo) / denom)
}

/// Recombine `R̂ ⊗ Ŝ` and rescale it into `[0, 1]`.
pub fn recombine_normalize(decomp: &IlluminationDecomposition) -> Image {
    minmax_rescale(&decomp.product(), decomp.epsilon)
}

/// Multiply by the local gain `E[I] / (E_Ω(x)[I] + ε)`.
///
/// `Ω(x)` is a `(2r+1)²` box clipped at the image border. The window mean
/// pools all three channels, so the gain is one scalar per pixel and leaves
/// chromaticity untouched.
pub fn local_gain(image: &Image, radius: usize, epsilon: f64) -> Result<Image, PanError> {
    check_epsilon(epsilon)?;
    if radius < 1 {
        return Err(PanError::InvalidRadius);
    }
    let gain = local_gain_map(image, radius, epsilon);
    let n = image.pixel_count();
    Ok(image.map_indexed(|v, i| v * gain[i % n]))
}

/// Per-pixel gain `G(x)` used by [`local_gain`], row-major.
pub fn local_gain_map(image: &Image, radius: usize, epsilon: f64) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let global = compute_stats(image).global_mean;

    // Channel-summed plane, then a summed-area table with a zero border row/column.
    let mut pooled = vec![0.0; h * w];
    for c in 0..CHANNELS {
        for (p, v) in pooled.iter_mut().zip(image.channel(c)) {
            *p += v;
        }
    }
    let stride = w + 1;
    let mut table = vec![0.0; (h + 1) * stride];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += pooled[y * w + x];
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }

    let mut gain = Vec::with_capacity(h * w);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius + 1).min(w));
            let sum = table[y1 * stride + x1] - table[y0 * stride + x1] - table[y1 * stride + x0]
                + table[y0 * stride + x0];
            let count = ((y1 - y0) * (x1 - x0) * CHANNELS) as f64;
            gain.push(global / (sum / count + epsilon));
        }
    }
    gain
}

/// Full pipeline: gray-world, optional local gain, log split, recombination.
pub fn pan_pipeline(image: &Image, config: &PanConfig) -> Result<Image, PanError> {
    config.validate()?;
    let eps = config.epsilon;
    let mut normalized = gray_world_normalize(image, eps)?;
    if config.enable_local_gain {
        normalized = local_gain(&normalized, config.local_window_radius, eps)?;
    }
    let decomp = retinex_decompose(&normalized, eps)?;
    Ok(recombine_normalize(&decomp))
}
