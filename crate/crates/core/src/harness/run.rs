use super::dataset::{DatasetPair, SkippedPair};
use super::report::{MetricReport, PairRecord};
use super::{HarnessError, Method, Metric, RunConfig};
use crate::evaluation::{
    cielab_stretch, gray_world_baseline, psnr, residual_error, rmse, ssim, white_patch, MetricValues, SsimConfig,
};
use crate::image::load_image;
use crate::pan::pan_pipeline;
use crate::Image;
use rayon::prelude::*;

/// Overrides `--jobs` when set.
pub const JOBS_ENV: &str = "ILLUM_ALIGN_JOBS";

/// Worker count: `ILLUM_ALIGN_JOBS`, then the flag, then available parallelism.
pub fn resolve_jobs(flag: Option<usize>) -> Result<usize, HarnessError> {
    let env = std::env::var(JOBS_ENV).ok();
    let jobs = match env.as_deref().map(str::trim) {
        Some(v) if !v.is_empty() => v
            .parse::<usize>()
            .map_err(|_| HarnessError::InvalidArgument(format!("{JOBS_ENV}={v} is not a worker count")))?,
        _ => flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if jobs == 0 {
        return Err(HarnessError::InvalidArgument("jobs must be at least 1".into()));
    }
    Ok(jobs)
}

pub fn apply_method(image: &Image, method: Method, config: &RunConfig) -> Result<Image, HarnessError> {
    Ok(match method {
        Method::Identity => image.clone(),
        Method::GrayWorld => gray_world_baseline(image, config.epsilon),
        Method::WhitePatch => white_patch(image, config.epsilon),
        Method::CieLab => cielab_stretch(image),
        Method::Pan => pan_pipeline(image, &config.pan_config())?,
    })
}

/// Selected metrics between the processed input and the (possibly processed) reference.
pub fn evaluate_images(input: &Image, reference: &Image, config: &RunConfig) -> Result<MetricValues, HarnessError> {
    let processed = apply_method(input, config.method, config)?;
    let reference = if config.normalize_reference && config.method.is_normalizer() {
        apply_method(reference, config.method, config)?
    } else {
        reference.clone()
    };
    let ssim_config = SsimConfig::default();
    let mut values = MetricValues::default();
    for &metric in &config.metrics {
        let v = match metric {
            Metric::Psnr => psnr(&processed, &reference)?,
            Metric::Ssim => ssim(&processed, &reference, &ssim_config)?,
            Metric::Rmse => rmse(&processed, &reference)?,
            Metric::Residual => residual_error(&processed, &reference)?,
        };
        match metric {
            Metric::Psnr => values.psnr = Some(v),
            Metric::Ssim => values.ssim = Some(v),
            Metric::Rmse => values.rmse = Some(v),
            Metric::Residual => values.residual = Some(v),
        }
    }
    Ok(values)
}

pub fn evaluate_pair(pair: &DatasetPair, config: &RunConfig) -> Result<PairRecord, HarnessError> {
    let input = load_image(&pair.input_path)?;
    let reference = load_image(&pair.reference_path)?;
    let values = evaluate_images(&input, &reference, config)?;
    Ok(PairRecord {
        id: pair.id.clone(),
        method: config.method,
        values,
        pixels: input.pixel_count(),
    })
}

/// Evaluate every pair on a pool of `jobs` workers.
///
/// A pair that fails to load or evaluate is logged and listed as skipped.
pub fn run_method(pairs: &[DatasetPair], config: &RunConfig, jobs: usize) -> Result<MetricReport, HarnessError> {
    if pairs.is_empty() {
        return Err(HarnessError::NoPairs);
    }
    let config = config.clone().validated()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<PairRecord, SkippedPair>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                evaluate_pair(pair, &config).map_err(|e| {
                    log::warn!("pair {}: {e}", pair.id);
                    SkippedPair {
                        id: pair.id.clone(),
                        reason: e.to_string(),
                    }
                })
            })
            .collect()
    });
    let (mut records, mut skipped) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(s) => skipped.push(s),
        }
    }
    Ok(MetricReport::new(&config, records, skipped))
}
