//! Gradients of the feature loss with respect to λ, α_geo and α_sem.
//!
//! Each scalar enters the forward pass at one place, so the gradient is a
//! single forward-mode directional derivative `dO/dθ` contracted with
//! `∂L/∂O`. Weight-matrix gradients are not derived here; use
//! [`finite_diff_gradient`].

use super::attention::gsra_forward_traced;
use super::loss::{feature_loss, feature_loss_gradient, LossConfig};
use super::{FeatureGrid, GsraError, GsraParams, Matrix};
use crate::evaluation::SsimConfig;

/// Central differences `(f(p + h·e_i) − f(p − h·e_i)) / 2h` for every coordinate.
pub fn finite_diff_gradient<F>(f: F, params: &[f64], step: f64) -> Result<Vec<f64>, GsraError>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(GsraError::InvalidArgument(format!("step {step}")));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        probe[i] = params[i] + step;
        let plus = f(&probe);
        probe[i] = params[i] - step;
        let minus = f(&probe);
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(GsraError::NonFinite(format!("objective at coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarGradients {
    pub loss: f64,
    pub lambda: f64,
    pub alpha_geo: f64,
    pub alpha_sem: f64,
}

/// Row-wise softmax Jacobian-vector product: `A ⊙ (dS − rowsum(A ⊙ dS))`.
fn softmax_jvp(a: &Matrix, ds: &Matrix) -> Matrix {
    let mut out = a.component_mul(ds);
    for (mut row, a_row) in out.row_iter_mut().zip(a.row_iter()) {
        let inner: f64 = row.iter().sum();
        for (o, &p) in row.iter_mut().zip(a_row.iter()) {
            *o -= p * inner;
        }
    }
    out
}

fn concat(left: &Matrix, right: &Matrix) -> Matrix {
    let (n, d) = left.shape();
    let mut out = Matrix::zeros(n, 2 * d);
    out.columns_mut(0, d).copy_from(left);
    out.columns_mut(d, d).copy_from(right);
    out
}

/// Loss and its analytic derivatives with respect to the three learnable scalars.
pub fn scalar_gradients(
    input: &FeatureGrid,
    geo_prior: &FeatureGrid,
    sem_prior: &FeatureGrid,
    target: &FeatureGrid,
    params: &GsraParams,
    loss: &LossConfig,
    ssim: &SsimConfig,
) -> Result<ScalarGradients, GsraError> {
    let trace = gsra_forward_traced(input, geo_prior, sem_prior, params)?;
    let upstream = feature_loss_gradient(&trace.output, target, loss, ssim)?;
    let value = feature_loss(&trace.output, target, loss, ssim)?;

    let att = &trace.attention;
    let (v_geo, v_sem) = (trace.v_geo.matrix(), trace.v_sem.matrix());
    let q = trace.q.matrix();
    let scale = 1.0 / (att.d as f64).sqrt();

    // λ: dA_rect/dλ = −A_geo.
    let d_rect = -&att.a_geo;
    let d_out = concat(&(&d_rect * v_geo), &(&d_rect * v_sem));
    let g_lambda = upstream.dot(&d_out);

    // α_geo moves K_geo, V_geo and, through A_geo, A_rect = ... − λ·A_geo.
    let dk = geo_prior.matrix() * &params.w_k_geo;
    let dv = geo_prior.matrix() * &params.w_v_geo;
    let d_geo = softmax_jvp(&att.a_geo, &(q * dk.transpose() * scale));
    let d_rect = d_geo * -params.lambda;
    let d_out = concat(&(&d_rect * v_geo + &att.a_rect * dv), &(&d_rect * v_sem));
    let g_alpha_geo = upstream.dot(&d_out);

    // α_sem moves K_sem, V_sem and A_rect through A_sem.
    let dk = sem_prior.matrix() * &params.w_k_sem;
    let dv = sem_prior.matrix() * &params.w_v_sem;
    let d_rect = softmax_jvp(&att.a_sem, &(q * dk.transpose() * scale));
    let d_out = concat(&(&d_rect * v_geo), &(&d_rect * v_sem + &att.a_rect * dv));
    let g_alpha_sem = upstream.dot(&d_out);

    Ok(ScalarGradients {
        loss: value,
        lambda: g_lambda,
        alpha_geo: g_alpha_geo,
        alpha_sem: g_alpha_sem,
    })
}
