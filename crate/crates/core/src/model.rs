//! One event through the whole network: influence window, fusion,
//! prediction, loss, and the attention updates of both entities.
//!
//! Stored dynamic embeddings enter each event as constants, so a forward
//! pass and its gradients span exactly one event.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{check_len, IacnError, Result};
use crate::event::{Interaction, ItemId, UserId};
use crate::fusion::{affine_backward, affine_predict, fusion_weight, prediction_input};
use crate::influence::{influence_embedding, InfluenceInput, InfluenceRecord, InfluenceTrace};
use crate::interaction::{
    attention_update, AttentionGrads, AttentionInput, AttentionTrace, AttentionWeights,
};
use crate::linalg::{sigmoid, sq_dist, Matrix};
use crate::neighborhood::NeighborhoodState;
use crate::state::{init_states, initial_dynamic_state, Dims, DynamicInit, DynamicState, Params};

/// Variants of the query-time user embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    /// Exponential fusion of interaction and influence embeddings.
    #[default]
    None,
    /// No influence layer: the query embedding is the last interaction embedding.
    InfluenceOff,
    /// `(1 + wΔ) ⊙ u(t) + I_u` in place of the exponential fusion.
    LatentCross,
}

impl Ablation {
    pub fn label(&self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::InfluenceOff => "influence-off",
            Ablation::LatentCross => "latent-cross",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" | "full" => Ok(Ablation::None),
            "influence-off" => Ok(Ablation::InfluenceOff),
            "latent-cross" => Ok(Ablation::LatentCross),
            other => Err(IacnError::InvalidArgument(format!(
                "unknown ablation {other:?} (none | influence-off | latent-cross)"
            ))),
        }
    }
}

/// Behaviour of the fusion when no neighbor event falls in the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyInfluence {
    /// `I_u = 0`; the query embedding decays toward the origin.
    #[default]
    Decay,
    /// `I_u := u(t)`; the query embedding stays put.
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub history_cap: usize,
    pub neighborhood_cap: Option<usize>,
    pub window_cap: usize,
    pub ablation: Ablation,
    pub share_item_attention: bool,
    pub influence_softmax: bool,
    pub empty_influence: EmptyInfluence,
    pub dyn_init: DynamicInit,
    pub lambda_user: f64,
    pub lambda_item: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            history_cap: 50,
            neighborhood_cap: Some(128),
            window_cap: 256,
            ablation: Ablation::None,
            share_item_attention: false,
            influence_softmax: false,
            empty_influence: EmptyInfluence::Decay,
            dyn_init: DynamicInit::default(),
            lambda_user: 1.0,
            lambda_item: 1.0,
        }
    }
}

/// A past interaction as remembered by one entity: the counterpart's
/// post-update embedding and the event features.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub time: f64,
    pub embedding: Vec<f64>,
    pub features: Vec<f64>,
}

pub type Snapshot = Arc<[f64]>;

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub dims: Dims,
    pub seed: u64,
    pub params: Params,
    pub state: DynamicState,
    pub(crate) user_hist: Vec<VecDeque<HistoryEntry>>,
    pub(crate) item_hist: Vec<VecDeque<HistoryEntry>>,
    pub(crate) neighborhood: NeighborhoodState<Snapshot>,
    pub(crate) processed: u64,
}

/// Everything about the query-time user embedding of `user` at `at`.
#[derive(Debug, Clone)]
pub struct QueryTrace {
    pub user: UserId,
    pub at: f64,
    pub delta_t: f64,
    pub last_time: Option<f64>,
    pub last_item: Option<ItemId>,
    /// Stored embedding `u(t)` at the user's last interaction.
    pub user_prev: Vec<f64>,
    window: Vec<(UserId, f64, Snapshot)>,
    influence: Option<InfluenceTrace>,
    /// Influence embedding as used by the fusion (after the empty-window rule).
    pub influence_vec: Vec<f64>,
    held: bool,
    pub fused: Vec<f64>,
    input: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl QueryTrace {
    fn window_inputs(&self) -> Vec<InfluenceInput<'_>> {
        self.window
            .iter()
            .map(|(v, t, e)| InfluenceInput {
                neighbor: *v,
                time: *t,
                embedding: e,
            })
            .collect()
    }

    pub fn influence_records(&self) -> Vec<InfluenceRecord> {
        match &self.influence {
            Some(tr) => tr.records(&self.window_inputs()),
            None => Vec::new(),
        }
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }
}

/// Recorded forward computation of one event, sufficient for exact gradients.
#[derive(Debug, Clone)]
pub struct EventTape {
    pub event: Interaction,
    pub query: QueryTrace,
    target: Vec<f64>,
    user_inputs: Vec<(Vec<f64>, Vec<f64>)>,
    item_inputs: Vec<(Vec<f64>, Vec<f64>)>,
    user_trace: AttentionTrace,
    item_trace: AttentionTrace,
    item_prev: Vec<f64>,
    pub prediction_loss: f64,
    pub loss: f64,
}

impl EventTape {
    pub fn user_new(&self) -> &[f64] {
        self.user_trace.output()
    }

    pub fn item_new(&self) -> &[f64] {
        self.item_trace.output()
    }

    pub fn user_attention(&self) -> &crate::interaction::AttentionBreakdown {
        &self.user_trace.breakdown
    }

    pub fn item_attention(&self) -> &crate::interaction::AttentionBreakdown {
        &self.item_trace.breakdown
    }
}

fn as_inputs(entries: &[(Vec<f64>, Vec<f64>)]) -> Vec<AttentionInput<'_>> {
    entries
        .iter()
        .map(|(e, f)| AttentionInput {
            embedding: e,
            features: f,
        })
        .collect()
}

/// `‖î − [one-hot, dyn]‖² + λ_U ‖u_new − u_prev‖² + λ_I ‖i_new − i_prev‖²`
#[allow(clippy::too_many_arguments)]
pub fn step_loss(
    predicted: &[f64],
    target_item: ItemId,
    target_dyn: &[f64],
    user_new: &[f64],
    user_prev: &[f64],
    item_new: &[f64],
    item_prev: &[f64],
    lambda_user: f64,
    lambda_item: f64,
) -> Result<f64> {
    let n = predicted
        .len()
        .checked_sub(target_dyn.len())
        .ok_or(IacnError::DimensionMismatch {
            context: "loss prediction",
            expected: target_dyn.len(),
            actual: predicted.len(),
        })?;
    if target_item >= n {
        return Err(IacnError::InvalidArgument(format!(
            "target item {target_item} out of range 0..{n}"
        )));
    }
    check_len("loss user embedding", user_prev.len(), user_new.len())?;
    check_len("loss item embedding", item_prev.len(), item_new.len())?;
    let mut pred = 0.0;
    for (k, p) in predicted.iter().enumerate() {
        let t = if k < n {
            if k == target_item {
                1.0
            } else {
                0.0
            }
        } else {
            target_dyn[k - n]
        };
        pred += (p - t) * (p - t);
    }
    Ok(pred
        + lambda_user * sq_dist(user_new, user_prev)
        + lambda_item * sq_dist(item_new, item_prev))
}

impl Model {
    pub fn new(dims: Dims, config: ModelConfig, seed: u64) -> Result<Self> {
        let (state, params) = init_states(&dims, seed, config.dyn_init)?;
        Ok(Self::with_parts(dims, config, seed, params, state))
    }

    pub(crate) fn with_parts(
        dims: Dims,
        config: ModelConfig,
        seed: u64,
        params: Params,
        state: DynamicState,
    ) -> Self {
        Model {
            user_hist: vec![VecDeque::new(); dims.users],
            item_hist: vec![VecDeque::new(); dims.items],
            neighborhood: NeighborhoodState::new(
                dims.users,
                dims.items,
                config.neighborhood_cap,
                true,
            ),
            processed: 0,
            config,
            dims,
            seed,
            params,
            state,
        }
    }

    /// Restarts dynamic embeddings, histories and neighborhoods from the
    /// seed; parameters are kept.
    pub fn reset_dynamic(&mut self) {
        self.state = initial_dynamic_state(&self.dims, self.seed, self.config.dyn_init);
        for h in &mut self.user_hist {
            h.clear();
        }
        for h in &mut self.item_hist {
            h.clear();
        }
        self.neighborhood = NeighborhoodState::new(
            self.dims.users,
            self.dims.items,
            self.config.neighborhood_cap,
            true,
        );
        self.processed = 0;
    }

    /// Time of the last processed event (−∞ before any).
    pub fn now(&self) -> f64 {
        self.neighborhood.now()
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    pub fn neighborhood(&self) -> &NeighborhoodState<Snapshot> {
        &self.neighborhood
    }

    pub fn user_history(&self, u: UserId) -> &VecDeque<HistoryEntry> {
        &self.user_hist[u]
    }

    pub fn item_history(&self, i: ItemId) -> &VecDeque<HistoryEntry> {
        &self.item_hist[i]
    }

    fn check_user(&self, u: UserId) -> Result<()> {
        if u >= self.dims.users {
            return Err(IacnError::InvalidArgument(format!(
                "user {u} out of range 0..{}",
                self.dims.users
            )));
        }
        Ok(())
    }

    /// Query-time embedding and predicted next item of `user` at `at`.
    pub fn query(&self, user: UserId, at: f64) -> Result<QueryTrace> {
        self.query_with(&self.params, user, at)
    }

    pub fn query_with(&self, params: &Params, user: UserId, at: f64) -> Result<QueryTrace> {
        self.check_user(user)?;
        if at < self.now() {
            return Err(IacnError::OutOfOrder {
                time: at,
                now: self.now(),
            });
        }
        let d = self.dims.dim;
        let user_prev = self.state.user(user).to_vec();
        let last_time = self.state.user_last_t[user];
        let last_item = self.state.user_last_item[user];
        let delta_t = last_time.map_or(0.0, |t| at - t);

        let mut window: Vec<(UserId, f64, Snapshot)> = Vec::new();
        if let (Some(t), false) = (last_time, self.config.ablation == Ablation::InfluenceOff) {
            let events = self.neighborhood.events_in_window(user, t, at);
            let skip = events.len().saturating_sub(self.config.window_cap);
            window = events[skip..]
                .iter()
                .map(|e| (e.neighbor, e.time, e.payload.clone()))
                .collect();
        }

        let (influence, influence_vec, held, fused) = match self.config.ablation {
            Ablation::InfluenceOff => (None, vec![0.0; d], false, user_prev.clone()),
            ablation => {
                let trace = match last_time {
                    Some(t) => {
                        let inputs: Vec<InfluenceInput> = window
                            .iter()
                            .map(|(v, tv, e)| InfluenceInput {
                                neighbor: *v,
                                time: *tv,
                                embedding: e,
                            })
                            .collect();
                        Some(influence_embedding(
                            &inputs,
                            &user_prev,
                            params.decay(user),
                            t,
                            delta_t,
                            params,
                            self.config.influence_softmax,
                        )?)
                    }
                    None => None,
                };
                let held = window.is_empty() && self.config.empty_influence == EmptyInfluence::Hold;
                let infl = if held {
                    user_prev.clone()
                } else {
                    trace.as_ref().map_or(vec![0.0; d], |tr| tr.output.clone())
                };
                let fused = match ablation {
                    Ablation::LatentCross => user_prev
                        .iter()
                        .zip(&infl)
                        .zip(&params.w_ctx)
                        .map(|((u, i), w)| (1.0 + w * delta_t) * u + i)
                        .collect(),
                    _ => {
                        let lambda = fusion_weight(params.fusion_rate(user), delta_t);
                        user_prev
                            .iter()
                            .zip(&infl)
                            .map(|(u, i)| u + (i - u) * lambda)
                            .collect()
                    }
                };
                (trace, infl, held, fused)
            }
        };

        let last = last_item.map(|i| (i, self.state.item(i)));
        let predicted = affine_predict(params, &fused, user, last);
        let input = prediction_input(params, &fused, user, last);
        Ok(QueryTrace {
            user,
            at,
            delta_t,
            last_time,
            last_item,
            user_prev,
            window,
            influence,
            influence_vec,
            held,
            fused,
            input,
            predicted,
        })
    }

    /// Forward pass of one event with the model's own parameters.
    pub fn forward(&self, e: &Interaction) -> Result<EventTape> {
        self.forward_with(&self.params, e)
    }

    /// Forward pass with substitute parameters (used by gradient checks).
    pub fn forward_with(&self, params: &Params, e: &Interaction) -> Result<EventTape> {
        self.check_user(e.user)?;
        if e.item >= self.dims.items {
            return Err(IacnError::InvalidArgument(format!(
                "item {} out of range 0..{}",
                e.item, self.dims.items
            )));
        }
        check_len("interaction features", self.dims.features, e.features.len())?;
        let query = self.query_with(params, e.user, e.time)?;

        let item_prev = self.state.item(e.item).to_vec();
        let mut target = vec![0.0; self.dims.items];
        target[e.item] = 1.0;
        target.extend_from_slice(&item_prev);
        let prediction_loss = sq_dist(&query.predicted, &target);

        let mut user_inputs: Vec<(Vec<f64>, Vec<f64>)> = self.user_hist[e.user]
            .iter()
            .map(|h| (h.embedding.clone(), h.features.clone()))
            .collect();
        user_inputs.push((item_prev.clone(), e.features.clone()));
        let mut item_inputs: Vec<(Vec<f64>, Vec<f64>)> = self.item_hist[e.item]
            .iter()
            .map(|h| (h.embedding.clone(), h.features.clone()))
            .collect();
        item_inputs.push((query.user_prev.clone(), e.features.clone()));

        let user_trace = attention_update(
            &as_inputs(&user_inputs),
            &query.user_prev,
            &AttentionWeights::user_side(params),
        )?;
        let item_trace = attention_update(
            &as_inputs(&item_inputs),
            &item_prev,
            &AttentionWeights::item_side(params, self.config.share_item_attention),
        )?;
        let loss = prediction_loss
            + self.config.lambda_user * sq_dist(user_trace.output(), &query.user_prev)
            + self.config.lambda_item * sq_dist(item_trace.output(), &item_prev);

        Ok(EventTape {
            event: e.clone(),
            query,
            target,
            user_inputs,
            item_inputs,
            user_trace,
            item_trace,
            item_prev,
            prediction_loss,
            loss,
        })
    }

    /// Exact gradient of `tape.loss`, accumulated into `grads`.
    pub fn backward(&self, params: &Params, tape: &EventTape, grads: &mut Params) {
        let q = &tape.query;
        let u = q.user;
        let grad_pred: Vec<f64> = q
            .predicted
            .iter()
            .zip(&tape.target)
            .map(|(p, t)| 2.0 * (p - t))
            .collect();
        let grad_fused = affine_backward(params, grads, &q.input, &grad_pred);

        let grad_influence: Option<Vec<f64>> = match self.config.ablation {
            Ablation::InfluenceOff => None,
            Ablation::LatentCross => {
                for ((w, g), u0) in grads.w_ctx.iter_mut().zip(&grad_fused).zip(&q.user_prev) {
                    *w += g * u0 * q.delta_t;
                }
                Some(grad_fused.clone())
            }
            Ablation::None => {
                let beta = params.fusion_rate(u);
                let lambda = fusion_weight(beta, q.delta_t);
                let grad_lambda: f64 = grad_fused
                    .iter()
                    .zip(q.influence_vec.iter().zip(&q.user_prev))
                    .map(|(g, (i, p))| g * (i - p))
                    .sum();
                let grad_beta = grad_lambda * q.delta_t * (-beta * q.delta_t).exp();
                grads.fusion_raw[u] += grad_beta * sigmoid(params.fusion_raw[u]);
                Some(grad_fused.iter().map(|g| g * lambda).collect())
            }
        };
        if let (Some(g_infl), Some(trace), false) = (grad_influence, &q.influence, q.held) {
            let grad_decay = trace.backward(
                &q.window_inputs(),
                &q.user_prev,
                &g_infl,
                &mut grads.w_infl_neighbor,
                &mut grads.w_infl_user,
            );
            grads.decay_raw[u] += grad_decay * sigmoid(params.decay_raw[u]);
        }

        let scale_u = 2.0 * self.config.lambda_user;
        let g_user: Vec<f64> = tape
            .user_new()
            .iter()
            .zip(&q.user_prev)
            .map(|(a, b)| scale_u * (a - b))
            .collect();
        tape.user_trace.backward(
            &as_inputs(&tape.user_inputs),
            &q.user_prev,
            &g_user,
            AttentionGrads {
                query: &mut grads.w_user,
                value: &mut grads.w_item,
                feature: &mut grads.w_feat,
            },
        );
        let scale_i = 2.0 * self.config.lambda_item;
        let g_item: Vec<f64> = tape
            .item_new()
            .iter()
            .zip(&tape.item_prev)
            .map(|(a, b)| scale_i * (a - b))
            .collect();
        let item_grads = if self.config.share_item_attention {
            AttentionGrads {
                query: &mut grads.w_user,
                value: &mut grads.w_item,
                feature: &mut grads.w_feat,
            }
        } else {
            AttentionGrads {
                query: &mut grads.v_item,
                value: &mut grads.v_user,
                feature: &mut grads.v_feat,
            }
        };
        tape.item_trace.backward(
            &as_inputs(&tape.item_inputs),
            &tape.item_prev,
            &g_item,
            item_grads,
        );
    }

    /// Stores the attention outputs of `tape` and advances histories and
    /// neighborhoods past its event.
    pub fn commit(&mut self, tape: &EventTape) -> Result<()> {
        let e = &tape.event;
        let user_new = tape.user_new().to_vec();
        let item_new = tape.item_new().to_vec();
        self.neighborhood
            .update(e, Arc::from(user_new.as_slice()))?;
        self.state
            .user_dyn
            .row_mut(e.user)
            .copy_from_slice(&user_new);
        self.state
            .item_dyn
            .row_mut(e.item)
            .copy_from_slice(&item_new);
        self.state.user_last_t[e.user] = Some(e.time);
        self.state.item_last_t[e.item] = Some(e.time);
        self.state.user_last_item[e.user] = Some(e.item);

        let cap = self.config.history_cap;
        let uh = &mut self.user_hist[e.user];
        uh.push_back(HistoryEntry {
            time: e.time,
            embedding: item_new,
            features: e.features.clone(),
        });
        while uh.len() > cap {
            uh.pop_front();
        }
        let ih = &mut self.item_hist[e.item];
        ih.push_back(HistoryEntry {
            time: e.time,
            embedding: user_new,
            features: e.features.clone(),
        });
        while ih.len() > cap {
            ih.pop_front();
        }
        self.processed += 1;
        Ok(())
    }

    /// Forward and commit without touching parameters; returns the tape.
    pub fn observe(&mut self, e: &Interaction) -> Result<EventTape> {
        let tape = self.forward(e)?;
        self.commit(&tape)?;
        Ok(tape)
    }

    /// Current item representations `[one-hot, dynamic]`, one row per item.
    pub fn item_representations(&self) -> Matrix {
        self.state.item_representations()
    }
}

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_block: &'static str,
    pub worst_index: usize,
    pub checked: usize,
}

/// `|a − f| / max(|a|, |f|, floor)`. The floor keeps round-off in the
/// difference quotient, of order `ε·|loss| / h`, from dominating entries
/// whose true derivative is near zero.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    diff / analytic.abs().max(numeric.abs()).max(floor)
}

/// Denominator floor used by [`gradient_check`] for a loss of magnitude `loss`.
pub fn gradient_floor(loss: f64) -> f64 {
    1e-4 * (1.0 + loss.abs())
}

/// Compares [`Model::backward`] against central finite differences of
/// [`Model::forward_with`] with step `h = 1e-6 · (1 + |θ|)`, over every
/// scalar parameter of every block.
pub fn gradient_check(model: &Model, e: &Interaction) -> Result<GradCheck> {
    let tape = model.forward(e)?;
    let mut analytic = Params::zeros(&model.dims);
    model.backward(&model.params, &tape, &mut analytic);

    let floor = gradient_floor(tape.loss);
    let mut probe = model.params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_block: "",
        worst_index: 0,
        checked: 0,
    };
    let analytic_blocks = analytic.blocks();
    for (b, (name, a_block)) in analytic_blocks.iter().enumerate() {
        for k in 0..a_block.len() {
            let orig = probe.blocks()[b].1[k];
            let h = 1e-6 * (1.0 + orig.abs());
            probe.blocks_mut()[b].1[k] = orig + h;
            let plus = model.forward_with(&probe, e)?.loss;
            probe.blocks_mut()[b].1[k] = orig - h;
            let minus = model.forward_with(&probe, e)?.loss;
            probe.blocks_mut()[b].1[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(a_block[k], numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_block = name;
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_events(rng: &mut ChaCha8Rng, dims: &Dims, count: usize) -> Vec<Interaction> {
        let mut t = 0.0;
        (0..count)
            .map(|_| {
                t += rng.random_range(0.05..1.5);
                Interaction::new(
                    rng.random_range(0..dims.users),
                    rng.random_range(0..dims.items),
                    t,
                    (0..dims.features)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect(),
                )
            })
            .collect()
    }

    fn warmed_model(config: ModelConfig, seed: u64) -> (Model, Vec<Interaction>) {
        let dims = Dims::new(4, 5, 4, 2).unwrap();
        let mut model = Model::new(dims, config, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = random_events(&mut rng, &dims, 60);
        for e in &events[..50] {
            model.observe(e).unwrap();
        }
        (model, events[50..].to_vec())
    }

    #[test]
    fn step_loss_cases() {
        let pred = [0.0, 1.0, 0.3, -0.2];
        let l = step_loss(
            &pred,
            1,
            &[0.3, -0.2],
            &[0.5],
            &[0.5],
            &[0.1],
            &[0.1],
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(l, 0.0);
        let l = step_loss(
            &pred,
            0,
            &[0.3, -0.2],
            &[0.5],
            &[0.0],
            &[0.1],
            &[0.4],
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(l, 2.0);
        let l = step_loss(
            &pred,
            0,
            &[0.3, -0.2],
            &[0.5],
            &[0.0],
            &[0.1],
            &[0.4],
            2.0,
            3.0,
        )
        .unwrap();
        assert!((l - (2.0 + 2.0 * 0.25 + 3.0 * 0.09)).abs() < 1e-12);
        assert!(step_loss(
            &pred,
            3,
            &[0.3, -0.2],
            &[0.5],
            &[0.0],
            &[0.1],
            &[0.4],
            1.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn first_event_uses_stored_embedding() {
        let config = ModelConfig {
            dyn_init: DynamicInit::Zero,
            ..ModelConfig::default()
        };
        let model = Model::new(Dims::new(2, 2, 3, 0).unwrap(), config, 1).unwrap();
        let tape = model.forward(&Interaction::new(0, 1, 5.0, vec![])).unwrap();
        assert_eq!(tape.query.delta_t, 0.0);
        assert_eq!(tape.query.fused, vec![0.0; 3]);
    }

    #[test]
    fn out_of_order_event_rejected() {
        let (mut model, rest) = warmed_model(ModelConfig::default(), 3);
        let mut early = rest[0].clone();
        early.time = 0.0;
        assert!(matches!(
            model.observe(&early),
            Err(IacnError::OutOfOrder { .. })
        ));
    }

    #[test]
    fn loss_matches_step_loss() {
        let (model, rest) = warmed_model(ModelConfig::default(), 4);
        let e = &rest[0];
        let tape = model.forward(e).unwrap();
        let l = step_loss(
            &tape.query.predicted,
            e.item,
            model.state.item(e.item),
            tape.user_new(),
            model.state.user(e.user),
            tape.item_new(),
            model.state.item(e.item),
            1.0,
            1.0,
        )
        .unwrap();
        assert!((l - tape.loss).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for ablation in [
            Ablation::None,
            Ablation::InfluenceOff,
            Ablation::LatentCross,
        ] {
            for (softmax, share, hold) in [(false, false, false), (true, true, true)] {
                let config = ModelConfig {
                    ablation,
                    influence_softmax: softmax,
                    share_item_attention: share,
                    empty_influence: if hold {
                        EmptyInfluence::Hold
                    } else {
                        EmptyInfluence::Decay
                    },
                    ..ModelConfig::default()
                };
                let (model, rest) = warmed_model(config, 5);
                for e in &rest[..4] {
                    let rep = gradient_check(&model, e).unwrap();
                    assert!(rep.max_rel_error <= 1e-5, "{ablation:?}: {rep:?}");
                }
            }
        }
    }

    #[test]
    fn empty_window_gives_zero_influence_gradient() {
        let config = ModelConfig::default();
        let dims = Dims::new(2, 2, 3, 0).unwrap();
        let mut model = Model::new(dims, config, 2).unwrap();
        model.observe(&Interaction::new(0, 0, 1.0, vec![])).unwrap();
        let e = Interaction::new(0, 1, 2.0, vec![]);
        let tape = model.forward(&e).unwrap();
        assert_eq!(tape.query.window_len(), 0);
        let mut g = Params::zeros(&dims);
        model.backward(&model.params, &tape, &mut g);
        assert!(g.w_infl_neighbor.as_slice().iter().all(|&x| x == 0.0));
        assert!(g.w_infl_user.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(g.decay_raw, vec![0.0, 0.0]);
    }

    #[test]
    fn prediction_only_gradient_is_outer_product() {
        let config = ModelConfig {
            lambda_user: 0.0,
            lambda_item: 0.0,
            ablation: Ablation::InfluenceOff,
            ..ModelConfig::default()
        };
        let (model, rest) = warmed_model(config, 6);
        let tape = model.forward(&rest[0]).unwrap();
        let mut g = Params::zeros(&model.dims);
        model.backward(&model.params, &tape, &mut g);
        let q = &tape.query;
        for r in 0..g.w_pred.rows() {
            let diff = 2.0 * (q.predicted[r] - tape.target[r]);
            for c in 0..g.w_pred.cols() {
                assert!((g.w_pred.get(r, c) - diff * q.input[c]).abs() < 1e-12);
            }
        }
        assert!(g.w_user.as_slice().iter().all(|&x| x == 0.0));
        assert!(g.v_user.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn histories_are_capped_and_snapshotted() {
        let config = ModelConfig {
            history_cap: 3,
            ..ModelConfig::default()
        };
        let dims = Dims::new(2, 2, 3, 0).unwrap();
        let mut model = Model::new(dims, config, 7).unwrap();
        for k in 0..6 {
            let tape = model
                .observe(&Interaction::new(0, k % 2, k as f64, vec![]))
                .unwrap();
            let last = model.user_history(0).back().unwrap();
            assert_eq!(last.embedding, tape.item_new());
            assert_eq!(
                model.item_history(k % 2).back().unwrap().embedding,
                tape.user_new()
            );
        }
        assert_eq!(model.user_history(0).len(), 3);
        assert_eq!(model.events_processed(), 6);
    }
}
