use super::{AttentionBundle, FeatureGrid, GsraError, GsraParams, Matrix};

fn same_shape(a: &FeatureGrid, b: &FeatureGrid, what: &str) -> Result<(), GsraError> {
    if a.matrix().shape() == b.matrix().shape() {
        Ok(())
    } else {
        Err(GsraError::ShapeMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.matrix().shape(),
            b.matrix().shape()
        )))
    }
}

/// `input + alpha · prior`.
pub fn prior_inject(
    input: &FeatureGrid,
    prior: &FeatureGrid,
    alpha: f64,
) -> Result<FeatureGrid, GsraError> {
    same_shape(input, prior, "prior injection")?;
    FeatureGrid::new(input.matrix() + prior.matrix() * alpha)
}

/// Bias-free key and value projections `(F·W_k, F·W_v)`.
pub fn kv_project(
    features: &FeatureGrid,
    w_k: &Matrix,
    w_v: &Matrix,
) -> Result<(FeatureGrid, FeatureGrid), GsraError> {
    let d = features.dim();
    for (name, w) in [("w_k", w_k), ("w_v", w_v)] {
        if w.shape() != (d, d) {
            return Err(GsraError::ShapeMismatch(format!(
                "{name} is {:?}, expected {d}x{d}",
                w.shape()
            )));
        }
    }
    Ok((
        FeatureGrid::new(features.matrix() * w_k)?,
        FeatureGrid::new(features.matrix() * w_v)?,
    ))
}

/// Row-wise `softmax(Q·Kᵀ/√d + B)`, stabilized by subtracting each row's max.
pub fn attention_map(
    q: &FeatureGrid,
    k: &FeatureGrid,
    bias: &Matrix,
    d: usize,
) -> Result<Matrix, GsraError> {
    if q.dim() != k.dim() {
        return Err(GsraError::ShapeMismatch(format!(
            "query dim {} vs key dim {}",
            q.dim(),
            k.dim()
        )));
    }
    let (n, m) = (q.tokens(), k.tokens());
    if bias.shape() != (n, m) {
        return Err(GsraError::ShapeMismatch(format!(
            "bias is {:?}, expected {n}x{m}",
            bias.shape()
        )));
    }
    if d == 0 {
        return Err(GsraError::InvalidArgument("head dimension must be positive".into()));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut logits = q.matrix() * k.matrix().transpose() * scale + bias;
    for mut row in logits.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.apply(|v| *v = (*v - max).exp());
        let total: f64 = row.iter().sum();
        row.apply(|v| *v /= total);
    }
    Ok(logits)
}

/// `A_sem − λ · A_geo`, used as is (rows sum to `1 − λ`).
pub fn rectify(a_sem: &Matrix, a_geo: &Matrix, lambda: f64) -> Result<Matrix, GsraError> {
    if a_sem.shape() != a_geo.shape() {
        return Err(GsraError::ShapeMismatch(format!(
            "attention maps {:?} vs {:?}",
            a_sem.shape(),
            a_geo.shape()
        )));
    }
    Ok(a_sem - a_geo * lambda)
}

/// Plain single-prior cross-attention `softmax(Q·Kᵀ/√d + B) · V` with
/// `Q = input·W_q` and keys/values from `input + alpha · prior`.
///
/// With λ = 0 this is bit-for-bit the semantic half of [`gsra_forward`].
pub fn cross_attention(
    input: &FeatureGrid,
    prior: &FeatureGrid,
    alpha: f64,
    w_q: &Matrix,
    w_k: &Matrix,
    w_v: &Matrix,
    bias: &Matrix,
) -> Result<FeatureGrid, GsraError> {
    let injected = prior_inject(input, prior, alpha)?;
    let q = FeatureGrid::new(input.matrix() * w_q)?;
    let (k, v) = kv_project(&injected, w_k, w_v)?;
    let a = attention_map(&q, &k, bias, input.dim())?;
    FeatureGrid::new(a * v.matrix())
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone)]
pub struct GsraTrace {
    pub q: FeatureGrid,
    pub k_geo: FeatureGrid,
    pub v_geo: FeatureGrid,
    pub k_sem: FeatureGrid,
    pub v_sem: FeatureGrid,
    pub attention: AttentionBundle,
    /// N×2d, `[A_rect·V_geo | A_rect·V_sem]`.
    pub output: FeatureGrid,
}

pub fn gsra_forward(
    input: &FeatureGrid,
    geo_prior: &FeatureGrid,
    sem_prior: &FeatureGrid,
    params: &GsraParams,
) -> Result<FeatureGrid, GsraError> {
    Ok(gsra_forward_traced(input, geo_prior, sem_prior, params)?.output)
}

pub fn gsra_forward_traced(
    input: &FeatureGrid,
    geo_prior: &FeatureGrid,
    sem_prior: &FeatureGrid,
    params: &GsraParams,
) -> Result<GsraTrace, GsraError> {
    same_shape(input, geo_prior, "geometric prior")?;
    same_shape(input, sem_prior, "semantic prior")?;
    let (n, d) = (input.tokens(), input.dim());
    params.validate(n, d)?;

    let f_geo = prior_inject(input, geo_prior, params.alpha_geo)?;
    let f_sem = prior_inject(input, sem_prior, params.alpha_sem)?;
    let q = FeatureGrid::new(input.matrix() * &params.w_q)?;
    let (k_geo, v_geo) = kv_project(&f_geo, &params.w_k_geo, &params.w_v_geo)?;
    let (k_sem, v_sem) = kv_project(&f_sem, &params.w_k_sem, &params.w_v_sem)?;
    let a_geo = attention_map(&q, &k_geo, &params.bias, d)?;
    let a_sem = attention_map(&q, &k_sem, &params.bias, d)?;
    let a_rect = rectify(&a_sem, &a_geo, params.lambda)?;

    let geo_half = &a_rect * v_geo.matrix();
    let sem_half = &a_rect * v_sem.matrix();
    let mut output = Matrix::zeros(n, 2 * d);
    output.columns_mut(0, d).copy_from(&geo_half);
    output.columns_mut(d, d).copy_from(&sem_half);

    Ok(GsraTrace {
        q,
        k_geo,
        v_geo,
        k_sem,
        v_sem,
        attention: AttentionBundle {
            a_geo,
            a_sem,
            a_rect,
            d,
        },
        output: FeatureGrid::new(output)?,
    })
}
