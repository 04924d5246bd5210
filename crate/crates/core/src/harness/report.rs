use super::dataset::{Layout, SkippedPair};
use super::{HarnessError, Metric, Method, RunConfig};
use crate::evaluation::MetricValues;
use crate::numeric::{mean, pairwise_sum};
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

pub const TOOL_NAME: &str = "illum-align";
pub const CSV_HEADER: &str = "id,method,psnr,ssim,rmse,residual";
pub const MEAN_ROW_ID: &str = "__mean__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Json => "json",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub id: String,
    pub method: Method,
    #[serde(flatten)]
    pub values: MetricValues,
    /// Pixel count, used by the pooled residual.
    #[serde(skip)]
    pub pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Aggregates {
    pub psnr: Option<Aggregate>,
    pub ssim: Option<Aggregate>,
    pub rmse: Option<Aggregate>,
    pub residual: Option<Aggregate>,
}

impl Aggregates {
    /// Mean over pairs of each selected metric; `pooled_residual` weights residuals by pixel count.
    pub fn compute(records: &[PairRecord], config: &RunConfig) -> Self {
        let collect = |f: fn(&MetricValues) -> Option<f64>| -> Vec<f64> {
            records.iter().filter_map(|r| f(&r.values)).collect()
        };
        let plain = |values: Vec<f64>| {
            (!values.is_empty()).then(|| Aggregate {
                mean: mean(&values),
                count: values.len(),
            })
        };
        let residual = if config.pooled_residual {
            let weighted: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.values.residual.map(|v| (v * r.pixels as f64, r.pixels as f64)))
                .collect();
            let total: Vec<f64> = weighted.iter().map(|w| w.0).collect();
            let pixels: Vec<f64> = weighted.iter().map(|w| w.1).collect();
            (!weighted.is_empty()).then(|| Aggregate {
                mean: pairwise_sum(&total) / pairwise_sum(&pixels),
                count: weighted.len(),
            })
        } else {
            plain(collect(|v| v.residual))
        };
        Self {
            psnr: plain(collect(|v| v.psnr)),
            ssim: plain(collect(|v| v.ssim)),
            rmse: plain(collect(|v| v.rmse)),
            residual,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<Aggregate> {
        match metric {
            Metric::Psnr => self.psnr,
            Metric::Ssim => self.ssim,
            Metric::Rmse => self.rmse,
            Metric::Residual => self.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub dataset: Option<String>,
    pub layout: Option<Layout>,
    pub config: RunConfig,
    /// Seconds since the Unix epoch from `SOURCE_DATE_EPOCH`, if set.
    pub timestamp: Option<u64>,
    pub pairs_total: usize,
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub skipped: Vec<SkippedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub meta: ReportMeta,
    pub pairs: Vec<PairRecord>,
    pub aggregates: Aggregates,
}

/// `SOURCE_DATE_EPOCH` as seconds; wall-clock time is never recorded.
pub fn timestamp_from_env() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

impl MetricReport {
    /// Sorts records and skips by id and fills in counts and aggregates.
    pub fn new(config: &RunConfig, mut pairs: Vec<PairRecord>, mut skipped: Vec<SkippedPair>) -> Self {
        pairs.sort_by(|a, b| a.id.cmp(&b.id));
        skipped.sort_by(|a, b| a.id.cmp(&b.id));
        let aggregates = Aggregates::compute(&pairs, config);
        Self {
            meta: ReportMeta {
                tool: TOOL_NAME,
                version: env!("CARGO_PKG_VERSION"),
                dataset: None,
                layout: None,
                config: config.clone(),
                timestamp: timestamp_from_env(),
                pairs_total: pairs.len() + skipped.len(),
                pairs_evaluated: pairs.len(),
                pairs_skipped: skipped.len(),
                skipped,
            },
            pairs,
            aggregates,
        }
    }

    /// Add pairs dropped before evaluation (e.g. by the dataset scan).
    pub fn add_skipped(&mut self, extra: impl IntoIterator<Item = SkippedPair>) {
        self.meta.skipped.extend(extra);
        self.meta.skipped.sort_by(|a, b| a.id.cmp(&b.id));
        self.meta.pairs_skipped = self.meta.skipped.len();
        self.meta.pairs_total = self.meta.pairs_evaluated + self.meta.pairs_skipped;
    }
}

pub fn render_json(report: &MetricReport) -> Result<String, HarnessError> {
    let mut out = serde_json::to_string_pretty(report)?;
    out.push('\n');
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn render_csv(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let method = report.meta.config.method;
    for r in &report.pairs {
        let v = &r.values;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.id,
            r.method,
            cell(v.psnr),
            cell(v.ssim),
            cell(v.rmse),
            cell(v.residual)
        );
    }
    let agg = |m: Metric| cell(report.aggregates.get(m).map(|a| a.mean));
    let _ = writeln!(
        out,
        "{MEAN_ROW_ID},{method},{},{},{},{}",
        agg(Metric::Psnr),
        agg(Metric::Ssim),
        agg(Metric::Rmse),
        agg(Metric::Residual)
    );
    out
}

pub fn emit_report(report: &MetricReport, format: ReportFormat, out: &Path) -> Result<(), HarnessError> {
    let text = match format {
        ReportFormat::Json => render_json(report)?,
        ReportFormat::Csv => render_csv(report),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, residual: f64, pixels: usize) -> PairRecord {
        PairRecord {
            id: id.into(),
            method: Method::Pan,
            values: MetricValues {
                psnr: Some(30.0 + residual),
                ssim: None,
                rmse: Some(residual * 2.0),
                residual: Some(residual),
            },
            pixels,
        }
    }

    fn config() -> RunConfig {
        RunConfig::new(Method::Pan, &[Metric::Psnr, Metric::Rmse, Metric::Residual]).unwrap()
    }

    #[test]
    fn two_pairs_give_four_csv_lines() {
        let report = MetricReport::new(&config(), vec![record("b", 0.2, 4), record("a", 0.1, 4)], vec![]);
        let csv = render_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "a,pan,30.100000,,0.200000,0.100000");
        assert!(lines[3].starts_with("__mean__,pan,30.150000,,0.300000,0.150000"));
    }

    #[test]
    fn aggregates_are_means_and_pooled_weights_by_pixels() {
        let records = vec![record("a", 0.1, 100), record("b", 0.4, 300)];
        let agg = Aggregates::compute(&records, &config());
        let residual = agg.residual.unwrap();
        assert!((residual.mean - 0.25).abs() < 1e-12);
        assert_eq!(residual.count, 2);
        assert!(agg.ssim.is_none());
        let pooled = RunConfig {
            pooled_residual: true,
            ..config()
        };
        let agg = Aggregates::compute(&records, &pooled);
        assert!((agg.residual.unwrap().mean - (0.1 * 100.0 + 0.4 * 300.0) / 400.0).abs() < 1e-12);
    }

    #[test]
    fn json_shape_and_stability() {
        let skipped = vec![SkippedPair {
            id: "z".into(),
            reason: "missing counterpart".into(),
        }];
        let mut report = MetricReport::new(&config(), vec![record("a", 0.1, 4)], skipped);
        report.add_skipped([SkippedPair {
            id: "c".into(),
            reason: "dimension mismatch".into(),
        }]);
        let a = render_json(&report).unwrap();
        assert_eq!(a, render_json(&report).unwrap());
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        let (meta, pairs, aggs) = (a.find("\"meta\"").unwrap(), a.find("\"pairs\"").unwrap(), a.find("\"aggregates\"").unwrap());
        assert!(meta < pairs && pairs < aggs);
        assert_eq!(v["meta"]["pairs_total"], 3);
        assert_eq!(v["meta"]["pairs_skipped"], 2);
        assert_eq!(v["meta"]["skipped"][0]["id"], "c");
        assert_eq!(v["pairs"][0]["method"], "pan");
        assert!(v["pairs"][0]["ssim"].is_null());
        assert_eq!(v["aggregates"]["residual"]["count"], 1);
        // Key order is preserved as declared in the structs.
        assert!(a.find("\"psnr\"").unwrap() < a.find("\"residual\"").unwrap());
    }

    #[test]
    fn emit_writes_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let report = MetricReport::new(&config(), vec![record("a", 0.1, 4)], vec![]);
        let json = dir.path().join("sub/r.json");
        let csv = dir.path().join("r.csv");
        emit_report(&report, ReportFormat::Json, &json).unwrap();
        emit_report(&report, ReportFormat::Csv, &csv).unwrap();
        assert_eq!(fs::read_to_string(csv).unwrap(), render_csv(&report));
        assert!(fs::read_to_string(json).unwrap().ends_with("}\n"));
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
