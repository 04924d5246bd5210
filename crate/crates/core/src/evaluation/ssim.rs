//! Structural similarity with Gaussian-weighted local statistics.
//!
//! Local means, variances and covariance are taken under an 11×11 Gaussian
//! window (σ = 1.5) evaluated only where the window fits inside the image.
//! The per-channel SSIM maps are averaged, then the three channels are
//! averaged.

use super::{check_shapes, MetricError};
use crate::image::CHANNELS;
use crate::numeric::pairwise_sum;
use crate::Image;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SsimConfig {
    /// Window side, odd.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        assert!(self.window % 2 == 1, "SSIM window side must be odd");
        let half = (self.window / 2) as f64;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - half;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total = pairwise_sum(&taps);
        taps.into_iter().map(|t| t / total).collect()
    }
}

/// SSIM evaluator with its Gaussian window precomputed.
#[derive(Debug, Clone)]
pub struct Ssim {
    config: SsimConfig,
    kernel: Vec<f64>,
}

impl Ssim {
    pub fn new(config: SsimConfig) -> Self {
        Self {
            kernel: config.kernel(),
            config,
        }
    }

    pub fn config(&self) -> &SsimConfig {
        &self.config
    }

    pub fn compute(&self, pred: &Image, reference: &Image) -> Result<f64, MetricError> {
        check_shapes(pred, reference)?;
        let win = self.config.window;
        if pred.height() < win || pred.width() < win {
            return Err(MetricError::ImageTooSmall {
                height: pred.height(),
                width: pred.width(),
                window: win,
            });
        }
        let per_channel: Vec<f64> = (0..CHANNELS)
            .map(|c| {
                self.plane_mean_ssim(pred.channel(c), reference.channel(c), pred.height(), pred.width())
            })
            .collect();
        Ok(pairwise_sum(&per_channel) / CHANNELS as f64)
    }

    fn plane_mean_ssim(&self, a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
        let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let mu_a = self.filter_valid(a, h, w);
        let mu_b = self.filter_valid(b, h, w);
        let e_aa = self.filter_valid(&aa, h, w);
        let e_bb = self.filter_valid(&bb, h, w);
        let e_ab = self.filter_valid(&ab, h, w);
        let (c1, c2) = (self.config.c1(), self.config.c2());
        let map: Vec<f64> = (0..mu_a.len())
            .map(|i| {
                let (ma, mb) = (mu_a[i], mu_b[i]);
                let var_a = e_aa[i] - ma * ma;
                let var_b = e_bb[i] - mb * mb;
                let cov = e_ab[i] - ma * mb;
                ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
            })
            .collect();
        pairwise_sum(&map) / map.len() as f64
    }

    /// Separable correlation restricted to positions where the window fits.
    fn filter_valid(&self, plane: &[f64], h: usize, w: usize) -> Vec<f64> {
        let k = &self.kernel;
        let n = k.len();
        let (oh, ow) = (h - n + 1, w - n + 1);
        let mut horiz = vec![0.0; h * ow];
        for y in 0..h {
            let row = &plane[y * w..(y + 1) * w];
            for x in 0..ow {
                horiz[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(t, v)| t * v).sum();
            }
        }
        let mut out = vec![0.0; oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                out[y * ow + x] = (0..n).map(|j| k[j] * horiz[(y + j) * ow + x]).sum();
            }
        }
        out
    }
}

/// SSIM between two images under `config`.
pub fn ssim(pred: &Image, reference: &Image, config: &SsimConfig) -> Result<f64, MetricError> {
    Ssim::new(*config).compute(pred, reference)
}
