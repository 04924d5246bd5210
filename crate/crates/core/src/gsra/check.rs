//! Seeded invariant and gradient suite behind `illum-align gsra-check`.

use super::{
    attention_map, cross_attention, feature_loss, finite_diff_gradient, gsra_forward,
    gsra_forward_traced, rectify, scalar_gradients, FeatureGrid, GsraError, GsraInstance,
    LossConfig, Matrix,
};
use crate::evaluation::SsimConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

pub const STOCHASTIC_TOL: f64 = 1e-9;
pub const COLLAPSE_TOL: f64 = 1e-12;
pub const GRADIENT_TOL: f64 = 1e-4;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const LAMBDA_GRID: [f64; 5] = [-0.5, 0.0, 0.3, 1.0, 1.7];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub tokens: usize,
    pub dim: usize,
    /// Random draws for the attention-map properties.
    pub draws: usize,
    /// Seeded instances for the gradient check.
    pub gradient_seeds: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            tokens: 4,
            dim: 8,
            draws: 200,
            gradient_seeds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub trials: usize,
    /// Largest observed error (absolute, or relative for gradients).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, trials: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            trials,
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub config: CheckConfig,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "gsra-check seed={} tokens={} dim={}",
            self.config.seed, self.config.tokens, self.config.dim
        )?;
        writeln!(f, "{:<28} {:>6} {:>12} {:>10}  result", "check", "trials", "worst", "tol")?;
        for o in &self.outcomes {
            writeln!(
                f,
                "{:<28} {:>6} {:>12.3e} {:>10.0e}  {}",
                o.name,
                o.trials,
                o.worst,
                o.tolerance,
                if o.passed { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "FAILED" })
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> FeatureGrid {
    FeatureGrid::new(random_matrix(rng, rows, cols, scale)).expect("finite values")
}

/// Worst deviation from nonnegativity and unit row sums.
fn stochastic_error(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|row| {
            let negative = row.iter().fold(0.0_f64, |m, &v| m.max(-v));
            negative.max((row.sum() - 1.0).abs())
        })
        .fold(0.0, f64::max)
}

fn row_sum_error(a: &Matrix, expected: f64) -> f64 {
    a.row_iter().map(|row| (row.sum() - expected).abs()).fold(0.0, f64::max)
}

pub fn row_stochasticity(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, d) = (config.tokens, config.dim);
    let mut worst = 0.0_f64;
    for _ in 0..config.draws {
        let q = random_grid(&mut rng, n, d, 3.0);
        let k = random_grid(&mut rng, n, d, 3.0);
        let bias = random_matrix(&mut rng, n, n, 2.0);
        worst = worst.max(stochastic_error(&attention_map(&q, &k, &bias, d)?));
    }
    Ok(CheckOutcome::new("row stochasticity", config.draws, worst, STOCHASTIC_TOL))
}

/// Rows of `A_sem − λ·A_geo` sum to `1 − λ`, on the fixed λ grid and on random λ in [−1, 2].
pub fn rectified_row_sums(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let (n, d) = (config.tokens, config.dim);
    let mut worst = 0.0_f64;
    let mut trials = 0;
    for draw in 0..config.draws {
        let q = random_grid(&mut rng, n, d, 1.0);
        let bias = random_matrix(&mut rng, n, n, 1.0);
        let a_geo = attention_map(&q, &random_grid(&mut rng, n, d, 1.0), &bias, d)?;
        let a_sem = attention_map(&q, &random_grid(&mut rng, n, d, 1.0), &bias, d)?;
        let random_lambda = -1.0 + 3.0 * rng.random::<f64>();
        let grid: &[f64] = if draw == 0 { &LAMBDA_GRID } else { &[] };
        for &lambda in grid.iter().chain([random_lambda].iter()) {
            let rect = rectify(&a_sem, &a_geo, lambda)?;
            worst = worst.max(row_sum_error(&rect, 1.0 - lambda));
            trials += 1;
        }
    }
    Ok(CheckOutcome::new("rectified row-sum law", trials, worst, STOCHASTIC_TOL))
}

/// With λ = 0 the semantic half must equal plain cross-attention bit for bit.
pub fn ablation_equivalence(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let trials = config.gradient_seeds.max(1);
    let mut worst = 0.0_f64;
    for i in 0..trials {
        let mut inst = GsraInstance::random(config.seed.wrapping_add(i as u64), config.tokens, config.dim);
        inst.params.lambda = 0.0;
        let out = gsra_forward(&inst.input, &inst.geo_prior, &inst.sem_prior, &inst.params)?;
        let p = &inst.params;
        let plain = cross_attention(
            &inst.input, &inst.sem_prior, p.alpha_sem, &p.w_q, &p.w_k_sem, &p.w_v_sem, &p.bias,
        )?;
        let sem_half = out.matrix().columns(config.dim, config.dim);
        let identical = sem_half
            .iter()
            .zip(plain.matrix().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !identical {
            worst = f64::INFINITY;
        }
    }
    Ok(CheckOutcome::new("ablation (lambda=0) bitwise", trials, worst, 0.0))
}

/// Identical geometric and semantic branches give `A_geo = A_sem` and `A_rect = (1−λ)·A_sem`.
pub fn shared_modality_collapse(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let trials = config.gradient_seeds.max(1);
    let mut worst = 0.0_f64;
    for i in 0..trials {
        let mut inst = GsraInstance::random(config.seed.wrapping_add(100 + i as u64), config.tokens, config.dim);
        let p = &mut inst.params;
        p.alpha_sem = p.alpha_geo;
        p.w_k_sem = p.w_k_geo.clone();
        p.w_v_sem = p.w_v_geo.clone();
        let trace = gsra_forward_traced(&inst.input, &inst.geo_prior, &inst.geo_prior, &inst.params)?;
        let att = &trace.attention;
        worst = worst.max((&att.a_geo - &att.a_sem).amax());
        worst = worst.max((&att.a_rect - &att.a_sem * (1.0 - inst.params.lambda)).amax());
    }
    Ok(CheckOutcome::new("shared-modality collapse", trials, worst, COLLAPSE_TOL))
}

/// Adding a per-row constant to the logits (through the bias) leaves the map unchanged.
pub fn softmax_shift_invariance(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let (n, d) = (config.tokens, config.dim);
    let mut worst = 0.0_f64;
    for _ in 0..config.draws {
        let q = random_grid(&mut rng, n, d, 1.0);
        let k = random_grid(&mut rng, n, d, 1.0);
        let bias = random_matrix(&mut rng, n, n, 1.0);
        let shifts: Vec<f64> = (0..n).map(|_| 10.0 * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let shifted = Matrix::from_fn(n, n, |i, j| bias[(i, j)] + shifts[i]);
        let a = attention_map(&q, &k, &bias, d)?;
        let b = attention_map(&q, &k, &shifted, d)?;
        worst = worst.max((a - b).amax());
    }
    Ok(CheckOutcome::new("softmax shift invariance", config.draws, worst, COLLAPSE_TOL))
}

/// Analytic λ, α_geo, α_sem gradients against central differences, worst relative error.
pub fn gradient_check(config: &CheckConfig) -> Result<CheckOutcome, GsraError> {
    let (loss, ssim) = (LossConfig::default(), SsimConfig::default());
    let mut worst = 0.0_f64;
    for i in 0..config.gradient_seeds {
        let inst = GsraInstance::random(config.seed.wrapping_add(1000 + i as u64), config.tokens, config.dim);
        let analytic = scalar_gradients(
            &inst.input, &inst.geo_prior, &inst.sem_prior, &inst.target, &inst.params, &loss, &ssim,
        )?;
        let objective = |p: &[f64]| {
            let mut params = inst.params.clone();
            params.lambda = p[0];
            params.alpha_geo = p[1];
            params.alpha_sem = p[2];
            gsra_forward(&inst.input, &inst.geo_prior, &inst.sem_prior, &params)
                .and_then(|out| feature_loss(&out, &inst.target, &loss, &ssim))
                .unwrap_or(f64::NAN)
        };
        let p0 = [inst.params.lambda, inst.params.alpha_geo, inst.params.alpha_sem];
        let numeric = finite_diff_gradient(objective, &p0, GRADIENT_STEP)?;
        for (a, n) in [analytic.lambda, analytic.alpha_geo, analytic.alpha_sem].iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(CheckOutcome::new("scalar gradients vs FD", config.gradient_seeds, worst, GRADIENT_TOL))
}

pub fn run_checks(config: &CheckConfig) -> Result<CheckReport, GsraError> {
    if config.tokens == 0 || config.dim == 0 {
        return Err(GsraError::InvalidArgument("tokens and dim must be positive".into()));
    }
    let outcomes = vec![
        row_stochasticity(config)?,
        rectified_row_sums(config)?,
        ablation_equivalence(config)?,
        shared_modality_collapse(config)?,
        softmax_shift_invariance(config)?,
        gradient_check(config)?,
    ];
    Ok(CheckReport {
        config: *config,
        outcomes,
    })
}
