//! Reconstruction losses: Charbonnier plus an SSIM term.

use super::{FeatureGrid, GsraError, Matrix};
use crate::evaluation::{ssim, SsimConfig};
use crate::numeric::{pairwise_sum, pairwise_sum_zip};
use crate::Image;

/// How per-element Charbonnier penalties are reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub enum CharbonnierReduction {
    /// `mean_i sqrt(d_i² + ε²)`.
    #[default]
    Mean,
    /// `sqrt(Σ_i d_i² + ε²)`, one norm over the whole residual.
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LossConfig {
    pub epsilon: f64,
    pub weight_charb: f64,
    pub weight_ssim: f64,
    pub reduction: CharbonnierReduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            weight_charb: 0.95,
            weight_ssim: 0.05,
            reduction: CharbonnierReduction::Mean,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<(), GsraError> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(GsraError::InvalidArgument(format!("epsilon {}", self.epsilon)));
        }
        if !(self.weight_charb >= 0.0 && self.weight_ssim >= 0.0) {
            return Err(GsraError::InvalidArgument("loss weights must be nonnegative".into()));
        }
        Ok(())
    }
}

fn check_len(pred: &[f64], target: &[f64]) -> Result<(), GsraError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(GsraError::ShapeMismatch(format!(
            "{} vs {} elements",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Charbonnier penalty between two equally long value slices.
pub fn charbonnier_loss(
    pred: &[f64],
    target: &[f64],
    epsilon: f64,
    reduction: CharbonnierReduction,
) -> Result<f64, GsraError> {
    check_len(pred, target)?;
    if !(epsilon > 0.0) {
        return Err(GsraError::InvalidArgument(format!("epsilon {epsilon}")));
    }
    let eps2 = epsilon * epsilon;
    Ok(match reduction {
        CharbonnierReduction::Mean => {
            // Accumulate the excess over ε so identical inputs give exactly ε.
            let excess = pairwise_sum_zip(pred, target, |p, t| {
                let d = p - t;
                (d * d + eps2).sqrt() - epsilon
            });
            epsilon + excess / pred.len() as f64
        }
        CharbonnierReduction::Norm => {
            let sq = pairwise_sum_zip(pred, target, |p, t| (p - t) * (p - t));
            (sq + eps2).sqrt()
        }
    })
}

/// Gradient of [`charbonnier_loss`] with respect to `pred`.
pub fn charbonnier_gradient(
    pred: &[f64],
    target: &[f64],
    epsilon: f64,
    reduction: CharbonnierReduction,
) -> Result<Vec<f64>, GsraError> {
    check_len(pred, target)?;
    let eps2 = epsilon * epsilon;
    Ok(match reduction {
        CharbonnierReduction::Mean => {
            let m = pred.len() as f64;
            pred.iter()
                .zip(target)
                .map(|(p, t)| {
                    let d = p - t;
                    d / (d * d + eps2).sqrt() / m
                })
                .collect()
        }
        CharbonnierReduction::Norm => {
            let norm = charbonnier_loss(pred, target, epsilon, reduction)?;
            pred.iter().zip(target).map(|(p, t)| (p - t) / norm).collect()
        }
    })
}

/// `w_charb · Charbonnier + w_ssim · (1 − SSIM)` on images.
pub fn total_loss(
    pred: &Image,
    target: &Image,
    config: &LossConfig,
    ssim_config: &SsimConfig,
) -> Result<f64, GsraError> {
    config.validate()?;
    let charb = charbonnier_loss(pred.as_slice(), target.as_slice(), config.epsilon, config.reduction)?;
    let s = ssim(pred, target, ssim_config)?;
    Ok(config.weight_charb * charb + config.weight_ssim * (1.0 - s))
}

struct GlobalSsimTerms {
    mean_x: f64,
    mean_y: f64,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
}

fn global_ssim_terms(x: &[f64], y: &[f64], c1: f64, c2: f64) -> GlobalSsimTerms {
    let m = x.len() as f64;
    let mean_x = pairwise_sum(x) / m;
    let mean_y = pairwise_sum(y) / m;
    let var_x = pairwise_sum_zip(x, x, |a, _| (a - mean_x) * (a - mean_x)) / m;
    let var_y = pairwise_sum_zip(y, y, |a, _| (a - mean_y) * (a - mean_y)) / m;
    let cov = pairwise_sum_zip(x, y, |a, b| (a - mean_x) * (b - mean_y)) / m;
    GlobalSsimTerms {
        mean_x,
        mean_y,
        a1: 2.0 * mean_x * mean_y + c1,
        a2: 2.0 * cov + c2,
        b1: mean_x * mean_x + mean_y * mean_y + c1,
        b2: var_x + var_y + c2,
    }
}

/// SSIM with a single uniform window spanning all values (population
/// statistics). Used for feature grids, which are too small for the 11×11
/// Gaussian window.
pub fn global_ssim(x: &[f64], y: &[f64], config: &SsimConfig) -> Result<f64, GsraError> {
    check_len(x, y)?;
    let t = global_ssim_terms(x, y, config.c1(), config.c2());
    Ok(t.a1 * t.a2 / (t.b1 * t.b2))
}

fn global_ssim_gradient(x: &[f64], y: &[f64], config: &SsimConfig) -> Vec<f64> {
    let m = x.len() as f64;
    let t = global_ssim_terms(x, y, config.c1(), config.c2());
    let denom = t.b1 * t.b2;
    let s = t.a1 * t.a2 / denom;
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let da1 = 2.0 * t.mean_y / m;
            let da2 = 2.0 * (yi - t.mean_y) / m;
            let db1 = 2.0 * t.mean_x / m;
            let db2 = 2.0 * (xi - t.mean_x) / m;
            (da1 * t.a2 + t.a1 * da2) / denom - s * (db1 / t.b1 + db2 / t.b2)
        })
        .collect()
}

/// `w_charb · Charbonnier + w_ssim · (1 − global SSIM)` on feature grids.
pub fn feature_loss(
    pred: &FeatureGrid,
    target: &FeatureGrid,
    config: &LossConfig,
    ssim_config: &SsimConfig,
) -> Result<f64, GsraError> {
    config.validate()?;
    if pred.matrix().shape() != target.matrix().shape() {
        return Err(GsraError::ShapeMismatch("prediction vs target".into()));
    }
    let (x, y) = (pred.as_slice(), target.as_slice());
    let charb = charbonnier_loss(x, y, config.epsilon, config.reduction)?;
    let s = global_ssim(x, y, ssim_config)?;
    Ok(config.weight_charb * charb + config.weight_ssim * (1.0 - s))
}

/// Gradient of [`feature_loss`] with respect to every element of `pred`.
pub fn feature_loss_gradient(
    pred: &FeatureGrid,
    target: &FeatureGrid,
    config: &LossConfig,
    ssim_config: &SsimConfig,
) -> Result<Matrix, GsraError> {
    config.validate()?;
    if pred.matrix().shape() != target.matrix().shape() {
        return Err(GsraError::ShapeMismatch("prediction vs target".into()));
    }
    let (x, y) = (pred.as_slice(), target.as_slice());
    let gc = charbonnier_gradient(x, y, config.epsilon, config.reduction)?;
    let gs = global_ssim_gradient(x, y, ssim_config);
    let values: Vec<f64> = gc
        .iter()
        .zip(&gs)
        .map(|(c, s)| config.weight_charb * c - config.weight_ssim * s)
        .collect();
    Ok(Matrix::from_vec(pred.tokens(), pred.dim(), values))
}
