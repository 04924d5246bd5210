//! Full-reference metrics and classical color-correction baselines.

mod baselines;
pub mod lab;
mod metrics;
mod ssim;

pub use baselines::{cielab_stretch, gray_world_baseline, white_patch};
pub use metrics::{improvement_percent, mse, psnr, residual_error, rmse, PSNR_CAP_DB};
pub use ssim::{ssim, Ssim, SsimConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {a_height}x{a_width} vs {b_height}x{b_width}")]
    DimensionMismatch {
        a_height: usize,
        a_width: usize,
        b_height: usize,
        b_width: usize,
    },
    #[error("image {height}x{width} is smaller than the {window}x{window} SSIM window")]
    ImageTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("baseline value must be positive, got {0}")]
    DegenerateBaseline(f64),
}

/// Metric values for one image pair. Unselected metrics are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub rmse: Option<f64>,
    pub residual: Option<f64>,
}

pub(crate) fn check_shapes(a: &crate::Image, b: &crate::Image) -> Result<(), MetricError> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch {
            a_height: a.height(),
            a_width: a.width(),
            b_height: b.height(),
            b_width: b.width(),
        })
    }
}
