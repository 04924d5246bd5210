//! Paired-dataset evaluation: scanning, synthetic corpora, method runs and reports.

pub mod dataset;
pub mod report;
pub mod run;
pub mod synth;

pub use dataset::{scan_dataset, DatasetPair, Layout, ScanResult, SkippedPair};
pub use report::{emit_report, render_csv, render_json, Aggregate, Aggregates, MetricReport, PairRecord, ReportFormat, ReportMeta};
pub use run::{apply_method, evaluate_images, evaluate_pair, resolve_jobs, run_method, JOBS_ENV};
pub use synth::{generate_pair, synth_corpus, SynthConfig, SynthPair};

use crate::evaluation::MetricError;
use crate::image::ImageError;
use crate::pan::{PanConfig, PanError, DEFAULT_EPSILON, DEFAULT_LOCAL_RADIUS};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset root {0} does not exist")]
    DatasetNotFound(PathBuf),
    #[error("no input images found under {0}")]
    EmptyDataset(PathBuf),
    #[error("dataset layout: {0}")]
    Layout(String),
    #[error("no evaluable pairs")]
    NoPairs,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Pan(#[from] PanError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Identity,
    #[serde(rename = "grayworld")]
    GrayWorld,
    #[serde(rename = "whitepatch")]
    WhitePatch,
    #[serde(rename = "cielab")]
    CieLab,
    Pan,
}

impl Method {
    pub const ALL: [Method; 5] = [Self::Identity, Self::GrayWorld, Self::WhitePatch, Self::CieLab, Self::Pan];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::GrayWorld => "grayworld",
            Self::WhitePatch => "whitepatch",
            Self::CieLab => "cielab",
            Self::Pan => "pan",
        }
    }

    /// Every method except `identity` transforms its input.
    pub fn is_normalizer(self) -> bool {
        self != Self::Identity
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected identity, grayworld, whitepatch, cielab or pan)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Psnr,
    Ssim,
    Rmse,
    Residual,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Self::Psnr, Self::Ssim, Self::Rmse, Self::Residual];

    pub fn name(self) -> &'static str {
        match self {
            Self::Psnr => "psnr",
            Self::Ssim => "ssim",
            Self::Rmse => "rmse",
            Self::Residual => "residual",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}` (expected psnr, ssim, rmse or residual)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub method: Method,
    /// Sorted and deduplicated by [`RunConfig::new`].
    pub metrics: Vec<Metric>,
    /// Apply the method to the reference as well (normalizers only).
    pub normalize_reference: bool,
    pub epsilon: f64,
    pub pan_local_gain: bool,
    pub pan_window_radius: usize,
    /// Aggregate residual as one mean over all pixels instead of a mean of per-pair means.
    pub pooled_residual: bool,
}

impl RunConfig {
    pub fn new(method: Method, metrics: &[Metric]) -> Result<Self, HarnessError> {
        let config = Self {
            method,
            metrics: metrics.to_vec(),
            ..Self::default()
        };
        config.validated()
    }

    /// Sort and deduplicate metrics, then check invariants.
    pub fn validated(mut self) -> Result<Self, HarnessError> {
        self.metrics.sort();
        self.metrics.dedup();
        if self.metrics.is_empty() {
            return Err(HarnessError::InvalidArgument("select at least one metric".into()));
        }
        self.pan_config().validate()?;
        Ok(self)
    }

    pub fn pan_config(&self) -> PanConfig {
        PanConfig {
            epsilon: self.epsilon,
            enable_local_gain: self.pan_local_gain,
            local_window_radius: self.pan_window_radius,
        }
    }

    pub fn has(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Pan,
            metrics: Metric::ALL.to_vec(),
            normalize_reference: true,
            epsilon: DEFAULT_EPSILON,
            pan_local_gain: false,
            pan_window_radius: DEFAULT_LOCAL_RADIUS,
            pooled_residual: false,
        }
    }
}
