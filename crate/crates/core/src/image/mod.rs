//! Planar RGB raster and channel statistics.
//!
//! [`Image`] stores three `f64` planes back to back (`R` plane, then `G`, then
//! `B`), each row-major. Values are nominally in `[0, 1]`; intermediate
//! products of the normalization pipeline may leave that range but are always
//! finite.

pub mod io;

use crate::numeric;
use thiserror::Error;

pub use io::{load_image, save_image};

pub const CHANNELS: usize = 3;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    FileNotFound(std::path::PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("invalid dimensions {height}x{width}")]
    InvalidDimensions { height: usize, width: usize },
    #[error("buffer length {actual} does not match {height}x{width}x3 = {expected}")]
    LengthMismatch {
        height: usize,
        width: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// H×W×3 planar floating-point image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// Build an image from planar data (`R` plane, `G` plane, `B` plane).
    pub fn from_planar(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::InvalidDimensions { height, width });
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(ImageError::LengthMismatch {
                height,
                width,
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite(i));
        }
        Ok(Self { height, width, data })
    }

    /// Build an image from interleaved `RGBRGB...` data.
    pub fn from_interleaved(height: usize, width: usize, rgb: &[f64]) -> Result<Self, ImageError> {
        let n = height * width;
        if rgb.len() != n * CHANNELS {
            return Err(ImageError::LengthMismatch {
                height,
                width,
                expected: n * CHANNELS,
                actual: rgb.len(),
            });
        }
        let mut data = vec![0.0; n * CHANNELS];
        for (i, px) in rgb.chunks_exact(CHANNELS).enumerate() {
            for c in 0..CHANNELS {
                data[c * n + i] = px[c];
            }
        }
        Self::from_planar(height, width, data)
    }

    /// Image whose every value is `value`.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self, ImageError> {
        Self::from_planar(height, width, vec![value; height * width * CHANNELS])
    }

    /// Image whose pixels all equal `rgb`.
    pub fn filled_rgb(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self, ImageError> {
        let n = height * width;
        let mut data = Vec::with_capacity(n * CHANNELS);
        for v in rgb {
            data.extend(std::iter::repeat_n(v, n));
        }
        Self::from_planar(height, width, data)
    }

    /// Build from a per-pixel function `f(y, x) -> [r, g, b]`.
    pub fn from_fn<F>(height: usize, width: usize, mut f: F) -> Result<Self, ImageError>
    where
        F: FnMut(usize, usize) -> [f64; 3],
    {
        let n = height * width;
        let mut data = vec![0.0; n * CHANNELS];
        for y in 0..height {
            for x in 0..width {
                let px = f(y, x);
                let i = y * width + x;
                for c in 0..CHANNELS {
                    data[c * n + i] = px[c];
                }
            }
        }
        Self::from_planar(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of pixels (H·W).
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// All values, planar order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + y * self.width + x]
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let n = self.pixel_count();
        let i = y * self.width + x;
        [self.data[i], self.data[n + i], self.data[2 * n + i]]
    }

    /// Interleaved `RGBRGB...` copy of the data.
    pub fn to_interleaved(&self) -> Vec<f64> {
        let n = self.pixel_count();
        let mut out = Vec::with_capacity(n * CHANNELS);
        for i in 0..n {
            for c in 0..CHANNELS {
                out.push(self.data[c * n + i]);
            }
        }
        out
    }

    /// Apply `f(value, channel)` to every value.
    ///
    /// Panics if `f` produces a non-finite value; every caller in this crate
    /// maps finite inputs to finite outputs.
    pub fn map_channels<F>(&self, f: F) -> Image
    where
        F: Fn(f64, usize) -> f64,
    {
        let n = self.pixel_count();
        let data: Vec<f64> = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(v, i / n))
            .collect();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Apply `f` to every value.
    pub fn map<F>(&self, f: F) -> Image
    where
        F: Fn(f64) -> f64,
    {
        self.map_channels(|v, _| f(v))
    }

    /// Apply `f(value, flat_index)` to every value (planar indexing).
    pub fn map_indexed<F>(&self, f: F) -> Image
    where
        F: Fn(f64, usize) -> f64,
    {
        let data = self.data.iter().enumerate().map(|(i, &v)| f(v, i)).collect();
        Image::from_parts_unchecked(self.height, self.width, data)
    }

    /// Copy with every value clamped to `[0, 1]`.
    pub fn clamped(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Elementwise product with a per-channel gain.
    pub fn scale_channels(&self, gain: [f64; 3]) -> Image {
        self.map_channels(|v, c| v * gain[c])
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), height * width * CHANNELS);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image { height, width, data }
    }
}

/// Per-channel and global first-order statistics of an [`Image`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub per_channel_mean: [f64; 3],
    pub global_mean: f64,
    pub per_channel_min: [f64; 3],
    pub per_channel_max: [f64; 3],
    pub global_min: f64,
    pub global_max: f64,
}

/// Channel means (pairwise-summed) and extrema.
pub fn compute_stats(image: &Image) -> ChannelStats {
    let mut per_channel_mean = [0.0; 3];
    let mut per_channel_min = [f64::INFINITY; 3];
    let mut per_channel_max = [f64::NEG_INFINITY; 3];
    for c in 0..CHANNELS {
        let plane = image.channel(c);
        per_channel_mean[c] = numeric::mean(plane);
        for &v in plane {
            per_channel_min[c] = per_channel_min[c].min(v);
            per_channel_max[c] = per_channel_max[c].max(v);
        }
    }
    ChannelStats {
        per_channel_mean,
        global_mean: numeric::mean(image.as_slice()),
        global_min: per_channel_min.iter().copied().fold(f64::INFINITY, f64::min),
        global_max: per_channel_max.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        per_channel_min,
        per_channel_max,
    }
}
