//! Parameter-free color-correction baselines.

use super::lab::{lab_to_srgb, srgb_to_lab};
use crate::image::{compute_stats, CHANNELS};
use crate::pan::gray_world_normalize;
use crate::Image;

/// Range below which the L stretch is treated as degenerate and skipped.
const MIN_L_RANGE: f64 = 1e-6;

/// White-patch: each channel divided by `(max_c + ε)`, then clamped.
pub fn white_patch(image: &Image, epsilon: f64) -> Image {
    let stats = compute_stats(image);
    let gain = stats.per_channel_max.map(|m| 1.0 / (m + epsilon));
    image.map_channels(|v, c| (v * gain[c]).clamp(0.0, 1.0))
}

/// Gray-world white balance, clamped to `[0, 1]`.
pub fn gray_world_baseline(image: &Image, epsilon: f64) -> Image {
    // epsilon validity is the caller's contract; a non-positive value falls back to the identity.
    gray_world_normalize(image, epsilon)
        .map(|img| img.clamped())
        .unwrap_or_else(|_| image.clone())
}

/// Stretch CIELAB lightness to span `[0, 100]`, keeping `a` and `b`.
///
/// Input is read as gamma-encoded sRGB and clamped to `[0, 1]` first.
pub fn cielab_stretch(image: &Image) -> Image {
    let (h, w) = (image.height(), image.width());
    let labs: Vec<[f64; 3]> = image
        .to_interleaved()
        .chunks_exact(CHANNELS)
        .map(|px| srgb_to_lab([px[0], px[1], px[2]].map(|v| v.clamp(0.0, 1.0))))
        .collect();
    let (lo, hi) = labs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l[0]), hi.max(l[0])));
    let range = hi - lo;
    let rgb: Vec<f64> = labs
        .iter()
        .flat_map(|&[l, a, b]| {
            let l = if range < MIN_L_RANGE {
                l
            } else {
                (l - lo) * 100.0 / range
            };
            lab_to_srgb([l, a, b]).map(|v| v.clamp(0.0, 1.0))
        })
        .collect();
    Image::from_interleaved(h, w, &rgb).expect("shape preserved")
}
