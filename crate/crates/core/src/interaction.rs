//! Attention update of the dynamic embeddings of the two entities involved in
//! an interaction.
//!
//! For an entity with current embedding `s` and history entries
//! `(x_k, q_k)` (counterpart embedding, interaction features):
//!
//! ```text
//! e_k = <V x_k, Q s> + <F q_k, Q s>
//! α   = softmax(e)
//! s'  = tanh(Σ_k α_k V x_k)
//! ```
//!
//! The user side uses `(Q, V, F) = (w_user, w_item, w_feat)` and the item side
//! `(v_item, v_user, v_feat)`.

use std::io::Write;

use crate::error::{check_len, Result};
use crate::linalg::{axpy, dot, softmax, softmax_backward, Matrix};
use crate::state::Params;

/// One attention input: the counterpart's embedding and the event features.
#[derive(Debug, Clone, Copy)]
pub struct AttentionInput<'a> {
    pub embedding: &'a [f64],
    pub features: &'a [f64],
}

/// The three matrices of one attention side.
#[derive(Debug, Clone, Copy)]
pub struct AttentionWeights<'a> {
    pub query: &'a Matrix,
    pub value: &'a Matrix,
    pub feature: &'a Matrix,
}

impl<'a> AttentionWeights<'a> {
    pub fn user_side(p: &'a Params) -> Self {
        AttentionWeights {
            query: &p.w_user,
            value: &p.w_item,
            feature: &p.w_feat,
        }
    }

    pub fn item_side(p: &'a Params, shared: bool) -> Self {
        if shared {
            Self::user_side(p)
        } else {
            AttentionWeights {
                query: &p.v_item,
                value: &p.v_user,
                feature: &p.v_feat,
            }
        }
    }
}

/// Scores, softmax weights and output of one attention update.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBreakdown {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub output: Vec<f64>,
}

impl AttentionBreakdown {
    /// Appends `event,score,weight` rows.
    pub fn write_csv<W: Write>(&self, event_index: usize, mut out: W) -> std::io::Result<()> {
        for (s, w) in self.scores.iter().zip(&self.weights) {
            writeln!(out, "{event_index},{s},{w}")?;
        }
        Ok(())
    }
}

/// Forward values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionTrace {
    query: Vec<f64>,
    values: Vec<Vec<f64>>,
    feats: Vec<Vec<f64>>,
    pub breakdown: AttentionBreakdown,
}

fn validate(
    history: &[AttentionInput<'_>],
    current: &[f64],
    w: &AttentionWeights<'_>,
) -> Result<()> {
    let d = w.query.rows();
    check_len("attention self embedding", d, current.len())?;
    for h in history {
        check_len(
            "attention history embedding",
            w.value.cols(),
            h.embedding.len(),
        )?;
        check_len(
            "attention history features",
            w.feature.cols(),
            h.features.len(),
        )?;
    }
    Ok(())
}

/// Query, per-entry values and feature terms, and scores.
type ScoreTerms = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

fn score_terms(
    history: &[AttentionInput<'_>],
    current: &[f64],
    w: &AttentionWeights<'_>,
) -> ScoreTerms {
    let query = w.query.matvec(current);
    let values: Vec<Vec<f64>> = history
        .iter()
        .map(|h| w.value.matvec(h.embedding))
        .collect();
    let feats: Vec<Vec<f64>> = history
        .iter()
        .map(|h| w.feature.matvec(h.features))
        .collect();
    let scores = values
        .iter()
        .zip(&feats)
        .map(|(v, f)| dot(v, &query) + dot(f, &query))
        .collect();
    (query, values, feats, scores)
}

/// Attention scores `e_k` of every history entry.
pub fn attention_scores(
    history: &[AttentionInput<'_>],
    current: &[f64],
    w: &AttentionWeights<'_>,
) -> Result<Vec<f64>> {
    validate(history, current, w)?;
    Ok(score_terms(history, current, w).3)
}

/// Attention update. An empty history leaves the embedding unchanged.
pub fn attention_update(
    history: &[AttentionInput<'_>],
    current: &[f64],
    w: &AttentionWeights<'_>,
) -> Result<AttentionTrace> {
    validate(history, current, w)?;
    let (query, values, feats, scores) = score_terms(history, current, w);
    if history.is_empty() {
        return Ok(AttentionTrace {
            query,
            values,
            feats,
            breakdown: AttentionBreakdown {
                scores,
                weights: Vec::new(),
                output: current.to_vec(),
            },
        });
    }
    let weights = softmax(&scores);
    let mut pre = vec![0.0; w.query.rows()];
    for (a, v) in weights.iter().zip(&values) {
        axpy(&mut pre, *a, v);
    }
    let output = pre.iter().map(|x| x.tanh()).collect();
    Ok(AttentionTrace {
        query,
        values,
        feats,
        breakdown: AttentionBreakdown {
            scores,
            weights,
            output,
        },
    })
}

/// Gradient accumulators matching [`AttentionWeights`].
pub struct AttentionGrads<'a> {
    pub query: &'a mut Matrix,
    pub value: &'a mut Matrix,
    pub feature: &'a mut Matrix,
}

impl AttentionTrace {
    pub fn output(&self) -> &[f64] {
        &self.breakdown.output
    }

    /// Accumulates parameter gradients given `d loss / d output`.
    /// Inputs (history and current embedding) are treated as constants.
    pub fn backward(
        &self,
        history: &[AttentionInput<'_>],
        current: &[f64],
        grad_output: &[f64],
        grads: AttentionGrads<'_>,
    ) {
        if history.is_empty() {
            return;
        }
        let out = &self.breakdown.output;
        let alpha = &self.breakdown.weights;
        let grad_pre: Vec<f64> = grad_output
            .iter()
            .zip(out)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        let grad_alpha: Vec<f64> = self.values.iter().map(|v| dot(&grad_pre, v)).collect();
        let grad_scores = softmax_backward(alpha, &grad_alpha);

        let mut grad_query = vec![0.0; self.query.len()];
        for k in 0..history.len() {
            // value path: α_k · g_pre, score path: g_e · query
            let mut grad_value = grad_pre.iter().map(|g| alpha[k] * g).collect::<Vec<_>>();
            axpy(&mut grad_value, grad_scores[k], &self.query);
            grads
                .value
                .add_outer(&grad_value, history[k].embedding, 1.0);
            grads
                .feature
                .add_outer(&self.query, history[k].features, grad_scores[k]);
            axpy(&mut grad_query, grad_scores[k], &self.values[k]);
            axpy(&mut grad_query, grad_scores[k], &self.feats[k]);
        }
        grads.query.add_outer(&grad_query, current, 1.0);
    }
}

/// User-side scores against the user's current embedding.
pub fn attention_scores_user(
    history: &[AttentionInput<'_>],
    user_dyn: &[f64],
    params: &Params,
) -> Result<Vec<f64>> {
    attention_scores(history, user_dyn, &AttentionWeights::user_side(params))
}

/// New user embedding from the user's history of (item embedding, features).
pub fn update_user_embedding(
    history: &[AttentionInput<'_>],
    user_dyn: &[f64],
    params: &Params,
) -> Result<(Vec<f64>, AttentionBreakdown)> {
    let trace = attention_update(history, user_dyn, &AttentionWeights::user_side(params))?;
    Ok((trace.breakdown.output.clone(), trace.breakdown))
}

/// New item embedding from the item's history of (user embedding, features).
pub fn update_item_embedding(
    history: &[AttentionInput<'_>],
    item_dyn: &[f64],
    params: &Params,
    shared: bool,
) -> Result<(Vec<f64>, AttentionBreakdown)> {
    let trace = attention_update(
        history,
        item_dyn,
        &AttentionWeights::item_side(params, shared),
    )?;
    Ok((trace.breakdown.output.clone(), trace.breakdown))
}
