//! Time-decayed influence of a user's neighbors.
//!
//! ```text
//! θ_{v,u}       = <W1 v(t_v), W2 u(t)>       (0 when v ∉ N_u)
//! I_u(t + Δ)    = Σ θ_{v,u} · exp(-δ_u (t + Δ - t_v)) · v(t_v),   t < t_v < t + Δ
//! ```

use std::io::Write;

use crate::error::{check_len, IacnError, Result};
use crate::event::UserId;
use crate::linalg::{axpy, dot, softmax, softmax_backward, Matrix};
use crate::state::Params;

/// A neighbor event entering the influence sum.
#[derive(Debug, Clone, Copy)]
pub struct InfluenceInput<'a> {
    pub neighbor: UserId,
    pub time: f64,
    /// The neighbor's dynamic embedding right after that event.
    pub embedding: &'a [f64],
}

/// Per-term breakdown, for interpretability dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRecord {
    pub neighbor: UserId,
    pub event_time: f64,
    pub weight: f64,
    pub decay: f64,
}

pub fn write_records_csv<W: Write>(records: &[InfluenceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "neighbor,event_time,weight,decay")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            r.neighbor, r.event_time, r.weight, r.decay
        )?;
    }
    Ok(())
}

/// Pairwise influence weight; zero for non-neighbors.
pub fn influence_weight(
    v_dyn: &[f64],
    u_dyn: &[f64],
    params: &Params,
    is_neighbor: bool,
) -> Result<f64> {
    let d = params.w_infl_user.cols();
    check_len("influence neighbor embedding", d, v_dyn.len())?;
    check_len("influence user embedding", d, u_dyn.len())?;
    if !is_neighbor {
        return Ok(0.0);
    }
    Ok(dot(
        &params.w_infl_neighbor.matvec(v_dyn),
        &params.w_infl_user.matvec(u_dyn),
    ))
}

/// Forward values of one influence embedding.
#[derive(Debug, Clone)]
pub struct InfluenceTrace {
    user_proj: Vec<f64>,
    neighbor_proj: Vec<Vec<f64>>,
    raw_weights: Vec<f64>,
    weights: Vec<f64>,
    decays: Vec<f64>,
    /// `t + Δ - t_v` per term.
    ages: Vec<f64>,
    normalized: bool,
    pub output: Vec<f64>,
}

/// Influence embedding at query time `t + delta_t` for a user whose last
/// interaction was at `t`. With `normalized` the weights θ are passed through
/// a softmax over the window first.
#[allow(clippy::too_many_arguments)]
pub fn influence_embedding(
    window: &[InfluenceInput<'_>],
    u_dyn: &[f64],
    delta_u: f64,
    t: f64,
    delta_t: f64,
    params: &Params,
    normalized: bool,
) -> Result<InfluenceTrace> {
    let d = params.w_infl_user.cols();
    check_len("influence user embedding", d, u_dyn.len())?;
    if !(delta_u > 0.0) {
        return Err(IacnError::InvalidArgument(format!(
            "decay rate must be positive, got {delta_u}"
        )));
    }
    let close = t + delta_t;
    for w in window {
        check_len("influence neighbor embedding", d, w.embedding.len())?;
        if !(w.time > t && w.time < close) {
            return Err(IacnError::WindowViolation {
                t_v: w.time,
                open: t,
                close,
            });
        }
    }
    let user_proj = params.w_infl_user.matvec(u_dyn);
    let neighbor_proj: Vec<Vec<f64>> = window
        .iter()
        .map(|w| params.w_infl_neighbor.matvec(w.embedding))
        .collect();
    let raw_weights: Vec<f64> = neighbor_proj.iter().map(|c| dot(c, &user_proj)).collect();
    let weights = if normalized {
        softmax(&raw_weights)
    } else {
        raw_weights.clone()
    };
    let ages: Vec<f64> = window.iter().map(|w| close - w.time).collect();
    let decays: Vec<f64> = ages.iter().map(|a| (-delta_u * a).exp()).collect();
    let mut output = vec![0.0; d];
    for (k, w) in window.iter().enumerate() {
        axpy(&mut output, weights[k] * decays[k], w.embedding);
    }
    Ok(InfluenceTrace {
        user_proj,
        neighbor_proj,
        raw_weights,
        weights,
        decays,
        ages,
        normalized,
        output,
    })
}

impl InfluenceTrace {
    pub fn records(&self, window: &[InfluenceInput<'_>]) -> Vec<InfluenceRecord> {
        window
            .iter()
            .zip(self.weights.iter().zip(&self.decays))
            .map(|(w, (&weight, &decay))| InfluenceRecord {
                neighbor: w.neighbor,
                event_time: w.time,
                weight,
                decay,
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Accumulates gradients of `W1`, `W2` and returns `d loss / d δ_u`.
    pub fn backward(
        &self,
        window: &[InfluenceInput<'_>],
        u_dyn: &[f64],
        grad_output: &[f64],
        grad_neighbor: &mut Matrix,
        grad_user: &mut Matrix,
    ) -> f64 {
        if window.is_empty() {
            return 0.0;
        }
        let mut grad_decay_rate = 0.0;
        let mut grad_weights = Vec::with_capacity(window.len());
        for (k, w) in window.iter().enumerate() {
            let proj = dot(grad_output, w.embedding);
            grad_weights.push(proj * self.decays[k]);
            // d exp(-δ a) / dδ = -a exp(-δ a)
            grad_decay_rate -= proj * self.weights[k] * self.ages[k] * self.decays[k];
        }
        let grad_raw = if self.normalized {
            softmax_backward(&self.weights, &grad_weights)
        } else {
            grad_weights
        };
        let mut grad_user_proj = vec![0.0; self.user_proj.len()];
        for (k, w) in window.iter().enumerate() {
            grad_neighbor.add_outer(&self.user_proj, w.embedding, grad_raw[k]);
            axpy(&mut grad_user_proj, grad_raw[k], &self.neighbor_proj[k]);
        }
        grad_user.add_outer(&grad_user_proj, u_dyn, 1.0);
        grad_decay_rate
    }

    /// Unnormalised weights θ.
    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }
}
