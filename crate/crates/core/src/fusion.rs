//! Query-time user embedding and next-item prediction.

use crate::error::{check_len, IacnError, Result};
use crate::event::{ItemId, UserId};
use crate::linalg::axpy;
use crate::state::{Params, StaticEmbedding};

/// Fused user embedding together with the predicted item representation
/// `[one-hot part, dynamic part]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub fused_user: Vec<f64>,
    pub predicted_item: Vec<f64>,
}

fn check_delta(delta_t: f64) -> Result<()> {
    if !(delta_t >= 0.0) {
        return Err(IacnError::InvalidArgument(format!(
            "elapsed time must be nonnegative, got {delta_t}"
        )));
    }
    Ok(())
}

/// `λ = 1 - exp(-β Δ)`, the weight moved onto the influence embedding.
#[inline]
pub fn fusion_weight(beta_u: f64, delta_t: f64) -> f64 {
    -(-beta_u * delta_t).exp_m1()
}

/// `u(t) + (I - u(t)) (1 - exp(-β Δ))`
pub fn fuse(u_t: &[f64], influence: &[f64], beta_u: f64, delta_t: f64) -> Result<Vec<f64>> {
    check_len("fusion influence", u_t.len(), influence.len())?;
    check_delta(delta_t)?;
    if !(beta_u > 0.0) {
        return Err(IacnError::InvalidArgument(format!(
            "fusion rate must be positive, got {beta_u}"
        )));
    }
    let lambda = fusion_weight(beta_u, delta_t);
    Ok(u_t
        .iter()
        .zip(influence)
        .map(|(u, i)| u + (i - u) * lambda)
        .collect())
}

/// `(1 + w Δ) ⊙ u(t) + I`
pub fn latent_cross_fuse(
    u_t: &[f64],
    influence: &[f64],
    w_ctx: &[f64],
    delta_t: f64,
) -> Result<Vec<f64>> {
    check_len("latent-cross influence", u_t.len(), influence.len())?;
    check_len("latent-cross context", u_t.len(), w_ctx.len())?;
    check_delta(delta_t)?;
    Ok(u_t
        .iter()
        .zip(influence)
        .zip(w_ctx)
        .map(|((u, i), w)| (1.0 + w * delta_t) * u + i)
        .collect())
}

/// `W [fused, one-hot(user), last_dyn, one-hot(last)] + B`, exploiting the
/// sparsity of the one-hot slots. `last = None` feeds zeros into both
/// last-item slots.
pub(crate) fn affine_predict(
    params: &Params,
    fused: &[f64],
    user: UserId,
    last: Option<(ItemId, &[f64])>,
) -> Vec<f64> {
    let dims = params.dims();
    let (m, d) = (dims.users, dims.dim);
    let w = &params.w_pred;
    let mut out = params.b_pred.clone();
    for (r, o) in out.iter_mut().enumerate() {
        let row = w.row(r);
        let mut acc = row[d + user];
        acc += row[..d].iter().zip(fused).map(|(a, b)| a * b).sum::<f64>();
        if let Some((item, dyn_emb)) = last {
            acc += row[d + m..d + m + d]
                .iter()
                .zip(dyn_emb)
                .map(|(a, b)| a * b)
                .sum::<f64>();
            acc += row[2 * d + m + item];
        }
        *o += acc;
    }
    out
}

/// Dense prediction input vector.
pub(crate) fn prediction_input(
    params: &Params,
    fused: &[f64],
    user: UserId,
    last: Option<(ItemId, &[f64])>,
) -> Vec<f64> {
    let dims = params.dims();
    let (m, d) = (dims.users, dims.dim);
    let mut x = vec![0.0; dims.pred_input_len()];
    x[..d].copy_from_slice(fused);
    x[d + user] = 1.0;
    if let Some((item, dyn_emb)) = last {
        x[d + m..d + m + d].copy_from_slice(dyn_emb);
        x[2 * d + m + item] = 1.0;
    }
    x
}

/// Predicted next-item representation. A user without a previous item is a
/// cold-start error; see [`predict_item_embedding_cold`].
pub fn predict_item_embedding(
    fused_user: &[f64],
    user_static: StaticEmbedding,
    last_item: Option<(&[f64], StaticEmbedding)>,
    params: &Params,
) -> Result<Vec<f64>> {
    let Some((dyn_emb, item_static)) = last_item else {
        return Err(IacnError::ColdStart(user_static.index));
    };
    let dims = params.dims();
    check_len("prediction user one-hot", dims.users, user_static.len)?;
    check_len("prediction item one-hot", dims.items, item_static.len)?;
    check_len("prediction last item embedding", dims.dim, dyn_emb.len())?;
    check_len("prediction fused user", dims.dim, fused_user.len())?;
    Ok(affine_predict(
        params,
        fused_user,
        user_static.index,
        Some((item_static.index, dyn_emb)),
    ))
}

/// Same as [`predict_item_embedding`] with zero vectors in the last-item
/// slots for a cold-start user.
pub fn predict_item_embedding_cold(
    fused_user: &[f64],
    user_static: StaticEmbedding,
    last_item: Option<(&[f64], StaticEmbedding)>,
    params: &Params,
) -> Result<Vec<f64>> {
    match last_item {
        Some(_) => predict_item_embedding(fused_user, user_static, last_item, params),
        None => {
            let dims = params.dims();
            check_len("prediction fused user", dims.dim, fused_user.len())?;
            Ok(affine_predict(params, fused_user, user_static.index, None))
        }
    }
}

/// Gradient of the affine prediction given `d loss / d output`: accumulates
/// into `W`, `B` and returns `d loss / d fused`.
pub(crate) fn affine_backward(
    params: &Params,
    grads: &mut Params,
    input: &[f64],
    grad_out: &[f64],
) -> Vec<f64> {
    let d = params.dims().dim;
    grads.w_pred.add_outer(grad_out, input, 1.0);
    axpy(&mut grads.b_pred, 1.0, grad_out);
    let mut grad_fused = vec![0.0; d];
    for (r, g) in grad_out.iter().enumerate() {
        axpy(&mut grad_fused, *g, &params.w_pred.row(r)[..d]);
    }
    grad_fused
}
