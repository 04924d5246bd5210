use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use illum_align::geometry::{depth_file_to_normal_file, GeometryError, DEFAULT_FOV_DEG};
use illum_align::gsra::check::{run_checks, CheckConfig};
use illum_align::harness::{
    apply_method, emit_report, resolve_jobs, run_method, scan_dataset, synth_corpus, HarnessError, Layout, Method,
    Metric, ReportFormat, RunConfig, SynthConfig,
};
use illum_align::image::{load_image, save_image};
use illum_align::pan::{PanError, DEFAULT_EPSILON, DEFAULT_LOCAL_RADIUS};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "illum-align", version, about = "Illumination normalization and evaluation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a method on a paired dataset and write a report.
    Run(RunArgs),
    /// Generate a seeded synthetic corpus of degraded/reference pairs.
    Synth(SynthArgs),
    /// Run the attention invariant and gradient suite.
    GsraCheck(GsraCheckArgs),
    /// Convert a grayscale depth PNG to an RGB normal map.
    #[command(name = "depth2normal")]
    DepthToNormal(DepthArgs),
    /// Apply a method to one image.
    Apply(ApplyArgs),
}

#[derive(Args)]
struct PanArgs {
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Enable the spatially varying gain stage of PAN.
    #[arg(long)]
    local_gain: bool,
    #[arg(long, default_value_t = DEFAULT_LOCAL_RADIUS)]
    window_radius: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = Layout::PairedDirs)]
    layout: Layout,
    #[arg(long, default_value_t = Method::Pan)]
    method: Method,
    #[arg(long, value_delimiter = ',', default_value = "psnr,ssim,rmse,residual")]
    metrics: Vec<Metric>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Compare against the raw reference instead of the normalized one.
    #[arg(long)]
    no_normalize_reference: bool,
    /// Aggregate residual over all pixels instead of per pair.
    #[arg(long)]
    pooled_residual: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    pan: PanArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    count: usize,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Global tint only, no shadow field.
    #[arg(long)]
    pure_tint: bool,
}

#[derive(Args)]
struct GsraCheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    tokens: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    draws: usize,
    #[arg(long, default_value_t = 20)]
    gradient_seeds: usize,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long, default_value_t = DEFAULT_FOV_DEG)]
    fov: f64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long, default_value_t = Method::Pan)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pan: PanArgs,
}

/// Failure that should exit with the usage status.
#[derive(Debug, Error)]
#[error("{0}")]
struct Usage(String);

#[derive(Debug, Error)]
#[error("{0}")]
struct ChecksFailed(String);

fn run_config(method: Method, metrics: Vec<Metric>, pan: &PanArgs) -> Result<RunConfig> {
    let config = RunConfig {
        method,
        metrics,
        epsilon: pan.epsilon,
        pan_local_gain: pan.local_gain,
        pan_window_radius: pan.window_radius,
        ..RunConfig::default()
    };
    config.validated().map_err(|e| Usage(e.to_string()).into())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = run_config(args.method, args.metrics, &args.pan)?;
    config.normalize_reference = !args.no_normalize_reference;
    config.pooled_residual = args.pooled_residual;
    let jobs = resolve_jobs(args.jobs)?;
    let scan = scan_dataset(&args.dataset, args.layout)?;
    if scan.pairs.is_empty() {
        return Err(HarnessError::NoPairs.into());
    }
    let mut report = run_method(&scan.pairs, &config, jobs)?;
    report.meta.dataset = args
        .dataset
        .file_name()
        .map(|n| n.to_string_lossy().into_owned());
    report.meta.layout = Some(args.layout);
    report.add_skipped(scan.skipped);
    emit_report(&report, args.format, &args.report)
        .with_context(|| format!("writing {}", args.report.display()))?;

    let meta = &report.meta;
    println!(
        "{}: {} evaluated, {} skipped",
        config.method, meta.pairs_evaluated, meta.pairs_skipped
    );
    for metric in &config.metrics {
        if let Some(a) = report.aggregates.get(*metric) {
            println!("  {metric:<8} {:.6} (n={})", a.mean, a.count);
        }
    }
    if meta.pairs_evaluated == 0 {
        return Err(HarnessError::NoPairs.into());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        count: args.count,
        size: args.size,
        seed: args.seed,
        pure_tint: args.pure_tint,
    };
    let pairs = synth_corpus(&config, &args.out)?;
    println!("wrote {} pairs to {}", pairs.len(), args.out.display());
    Ok(())
}

fn cmd_gsra_check(args: GsraCheckArgs) -> Result<()> {
    let config = CheckConfig {
        seed: args.seed,
        tokens: args.tokens,
        dim: args.dim,
        draws: args.draws,
        gradient_seeds: args.gradient_seeds,
    };
    if config.tokens == 0 || config.dim == 0 {
        return Err(Usage("tokens and dim must be positive".into()).into());
    }
    let report = run_checks(&config)?;
    println!("{report}");
    if !report.passed() {
        return Err(ChecksFailed("one or more checks failed".into()).into());
    }
    Ok(())
}

fn cmd_depth(args: DepthArgs) -> Result<()> {
    let normals = depth_file_to_normal_file(&args.input, &args.out, args.fov)?;
    println!("wrote {}x{} normal map to {}", normals.width, normals.height, args.out.display());
    Ok(())
}

fn cmd_apply(args: ApplyArgs) -> Result<()> {
    let config = run_config(args.method, Metric::ALL.to_vec(), &args.pan)?;
    let image = load_image(&args.input)?;
    let out = apply_method(&image, args.method, &config)?;
    save_image(&out.clamped(), &args.out)?;
    Ok(())
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<Usage>()
            || matches!(e.downcast_ref::<HarnessError>(), Some(HarnessError::InvalidArgument(_)))
            || matches!(e.downcast_ref::<GeometryError>(), Some(GeometryError::InvalidFov(_)))
            || e.is::<PanError>()
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::GsraCheck(a) => cmd_gsra_check(a),
        Command::DepthToNormal(a) => cmd_depth(a),
        Command::Apply(a) => cmd_apply(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
