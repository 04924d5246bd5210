//! Rectified cross-modal attention at desk scale.
//!
//! A single-head kernel that injects a geometric and a semantic prior into
//! the same token grid, attends to both with one shared query, and subtracts
//! the two attention maps: `A_rect = A_sem − λ · A_geo`. The output
//! concatenates `A_rect · V_geo` and `A_rect · V_sem` along the channel axis.
//!
//! The module also carries the training losses and an analytic gradient for
//! the three scalar parameters (λ, α_geo, α_sem), checked against central
//! finite differences in [`check`].

mod attention;
pub mod check;
mod grad;
mod loss;

pub use attention::{
    attention_map, cross_attention, gsra_forward, gsra_forward_traced, kv_project, prior_inject,
    rectify, GsraTrace,
};
pub use grad::{finite_diff_gradient, scalar_gradients, ScalarGradients};
pub use loss::{
    charbonnier_gradient, charbonnier_loss, feature_loss, feature_loss_gradient, global_ssim,
    total_loss, CharbonnierReduction, LossConfig,
};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Matrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsraError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Metric(#[from] crate::evaluation::MetricError),
}

/// N×d token features (one row per token).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid(Matrix);

impl FeatureGrid {
    pub fn new(values: Matrix) -> Result<Self, GsraError> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(GsraError::ShapeMismatch("feature grid must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GsraError::NonFinite("feature grid".into()));
        }
        Ok(Self(values))
    }

    /// Build from row-major values.
    pub fn from_rows(tokens: usize, dim: usize, values: &[f64]) -> Result<Self, GsraError> {
        if values.len() != tokens * dim {
            return Err(GsraError::ShapeMismatch(format!(
                "{} values for a {tokens}x{dim} grid",
                values.len()
            )));
        }
        Self::new(Matrix::from_row_slice(tokens, dim, values))
    }

    pub fn zeros(tokens: usize, dim: usize) -> Self {
        Self(Matrix::zeros(tokens, dim))
    }

    pub fn tokens(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Values in storage (column-major) order.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// Learnable state of one rectified-attention layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GsraParams {
    pub alpha_geo: f64,
    pub alpha_sem: f64,
    /// Unconstrained rectification weight.
    pub lambda: f64,
    pub w_q: Matrix,
    pub w_k_geo: Matrix,
    pub w_v_geo: Matrix,
    pub w_k_sem: Matrix,
    pub w_v_sem: Matrix,
    /// N×N relative position bias, shared by both attention maps.
    pub bias: Matrix,
}

impl GsraParams {
    /// Identity projections, zero bias, zero prior strength, λ = 0.
    pub fn identity(tokens: usize, dim: usize) -> Self {
        let eye = Matrix::identity(dim, dim);
        Self {
            alpha_geo: 0.0,
            alpha_sem: 0.0,
            lambda: 0.0,
            w_q: eye.clone(),
            w_k_geo: eye.clone(),
            w_v_geo: eye.clone(),
            w_k_sem: eye.clone(),
            w_v_sem: eye,
            bias: Matrix::zeros(tokens, tokens),
        }
    }

    pub fn validate(&self, tokens: usize, dim: usize) -> Result<(), GsraError> {
        let weights = [
            ("w_q", &self.w_q),
            ("w_k_geo", &self.w_k_geo),
            ("w_v_geo", &self.w_v_geo),
            ("w_k_sem", &self.w_k_sem),
            ("w_v_sem", &self.w_v_sem),
        ];
        for (name, w) in weights {
            if w.shape() != (dim, dim) {
                return Err(GsraError::ShapeMismatch(format!(
                    "{name} is {:?}, expected {dim}x{dim}",
                    w.shape()
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(GsraError::NonFinite(name.into()));
            }
        }
        if self.bias.shape() != (tokens, tokens) {
            return Err(GsraError::ShapeMismatch(format!(
                "bias is {:?}, expected {tokens}x{tokens}",
                self.bias.shape()
            )));
        }
        let scalars = [self.alpha_geo, self.alpha_sem, self.lambda];
        if scalars.iter().any(|v| !v.is_finite()) || self.bias.iter().any(|v| !v.is_finite()) {
            return Err(GsraError::NonFinite("scalar parameters or bias".into()));
        }
        Ok(())
    }
}

/// Attention maps produced by one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBundle {
    pub a_geo: Matrix,
    pub a_sem: Matrix,
    pub a_rect: Matrix,
    /// Head dimension used in the `1/√d` logit scale.
    pub d: usize,
}

/// A seeded random problem: features, priors, regression target and parameters.
#[derive(Debug, Clone)]
pub struct GsraInstance {
    pub input: FeatureGrid,
    pub geo_prior: FeatureGrid,
    pub sem_prior: FeatureGrid,
    /// N×2d target for the output.
    pub target: FeatureGrid,
    pub params: GsraParams,
}

impl GsraInstance {
    pub fn random(seed: u64, tokens: usize, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = |rows: usize, cols: usize, scale: f64| {
            Matrix::from_fn(rows, cols, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
        };
        let w_scale = 1.0 / (dim as f64).sqrt();
        let input = grid(tokens, dim, 1.0);
        let geo = grid(tokens, dim, 1.0);
        let sem = grid(tokens, dim, 1.0);
        let target = grid(tokens, 2 * dim, 1.0);
        let w_q = grid(dim, dim, w_scale);
        let w_k_geo = grid(dim, dim, w_scale);
        let w_v_geo = grid(dim, dim, w_scale);
        let w_k_sem = grid(dim, dim, w_scale);
        let w_v_sem = grid(dim, dim, w_scale);
        let bias = grid(tokens, tokens, 0.5);
        let mut scalar = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        let params = GsraParams {
            alpha_geo: scalar(0.1, 1.0),
            alpha_sem: scalar(0.1, 1.0),
            lambda: scalar(0.0, 1.0),
            w_q,
            w_k_geo,
            w_v_geo,
            w_k_sem,
            w_v_sem,
            bias,
        };
        Self {
            input: FeatureGrid(input),
            geo_prior: FeatureGrid(geo),
            sem_prior: FeatureGrid(sem),
            target: FeatureGrid(target),
            params,
        }
    }
}
