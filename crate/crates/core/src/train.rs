//! Chronological per-event training.

use std::time::Instant;

use crate::error::{IacnError, Result};
use crate::event::{EventLog, Interaction};
use crate::model::{Ablation, EmptyInfluence, Model, ModelConfig};
use crate::state::{Dims, DynamicInit, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub lambda_user: f64,
    pub lambda_item: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub history_cap: usize,
    pub neighborhood_cap: Option<usize>,
    pub window_cap: usize,
    pub seed: u64,
    pub ablation: Ablation,
    pub split: [f64; 3],
    pub optimizer: OptimizerKind,
    pub share_item_attention: bool,
    pub influence_softmax: bool,
    pub empty_influence: EmptyInfluence,
    pub dyn_init: DynamicInit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        TrainConfig {
            dim: 128,
            lambda_user: m.lambda_user,
            lambda_item: m.lambda_item,
            learning_rate: 1e-3,
            epochs: 50,
            history_cap: m.history_cap,
            neighborhood_cap: m.neighborhood_cap,
            window_cap: m.window_cap,
            seed: 0,
            ablation: m.ablation,
            split: [0.8, 0.1, 0.1],
            optimizer: OptimizerKind::Adam,
            share_item_attention: m.share_item_attention,
            influence_softmax: m.influence_softmax,
            empty_influence: m.empty_influence,
            dyn_init: m.dyn_init,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IacnError::InvalidArgument(msg));
        if self.dim == 0 {
            return bad("embedding dimension must be positive".into());
        }
        if !(self.lambda_user >= 0.0 && self.lambda_item >= 0.0) {
            return bad("smoothness weights must be nonnegative".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.history_cap == 0 || self.window_cap == 0 || self.neighborhood_cap == Some(0) {
            return bad("history, window and neighborhood caps must be positive".into());
        }
        check_fractions(&self.split)
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            history_cap: self.history_cap,
            neighborhood_cap: self.neighborhood_cap,
            window_cap: self.window_cap,
            ablation: self.ablation,
            share_item_attention: self.share_item_attention,
            influence_softmax: self.influence_softmax,
            empty_influence: self.empty_influence,
            dyn_init: self.dyn_init,
            lambda_user: self.lambda_user,
            lambda_item: self.lambda_item,
        }
    }
}

fn check_fractions(f: &[f64; 3]) -> Result<()> {
    if f.iter().any(|x| !(*x >= 0.0)) || ((f[0] + f[1] + f[2]) - 1.0).abs() > 1e-9 {
        return Err(IacnError::InvalidArgument(format!(
            "split fractions must be nonnegative and sum to 1, got {f:?}"
        )));
    }
    Ok(())
}

/// Contiguous train/validation/test segments in time order.
pub fn chronological_split(
    log: &EventLog,
    fractions: [f64; 3],
) -> Result<(EventLog, EventLog, EventLog)> {
    check_fractions(&fractions)?;
    let n = log.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let bounds = [0, n_train, n_train + n_val, n];
    for (k, name) in ["train", "validation", "test"].iter().enumerate() {
        if bounds[k + 1] <= bounds[k] {
            return Err(IacnError::Empty(format!(
                "{name} segment is empty ({n} events, fractions {fractions:?})"
            )));
        }
    }
    Ok((
        log.slice(bounds[0]..bounds[1]),
        log.slice(bounds[1]..bounds[2]),
        log.slice(bounds[2]..bounds[3]),
    ))
}

/// Adam with bias correction, applied lazily: entries whose gradient is
/// exactly zero keep both their value and their moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Params,
    pub v: Params,
    pub t: u64,
}

impl Adam {
    pub fn new(dims: &Dims, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Params::zeros(dims),
            v: Params::zeros(dims),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let g_blocks = grads.blocks();
        let m_blocks = self.m.blocks_mut();
        let v_blocks = self.v.blocks_mut();
        let p_blocks = params.blocks_mut();
        for (((p, g), m), v) in p_blocks
            .into_iter()
            .zip(g_blocks)
            .zip(m_blocks)
            .zip(v_blocks)
        {
            for k in 0..p.1.len() {
                let gk = g.1[k];
                if gk == 0.0 {
                    continue;
                }
                m.1[k] = b1 * m.1[k] + (1.0 - b1) * gk;
                v.1[k] = b2 * v.1[k] + (1.0 - b2) * gk * gk;
                let m_hat = m.1[k] / c1;
                let v_hat = v.1[k] / c2;
                p.1[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Optimizer {
    Adam(Adam),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, dims: &Dims, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(dims, lr)),
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        match self {
            Optimizer::Adam(adam) => adam.step(params, grads),
            Optimizer::Sgd { lr } => {
                for (p, g) in params.blocks_mut().into_iter().zip(grads.blocks()) {
                    for (x, gx) in p.1.iter_mut().zip(g.1) {
                        *x -= *lr * gx;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_loss: f64,
    pub events_per_sec: f64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: Model,
    pub optimizer: Optimizer,
    grads: Params,
    epochs_done: usize,
}

impl Trainer {
    pub fn new(model: Model, optimizer: Optimizer) -> Self {
        let grads = Params::zeros(&model.dims);
        Trainer {
            model,
            optimizer,
            grads,
            epochs_done: 0,
        }
    }

    /// Fresh model and optimizer for a log with `users`, `items` and
    /// `features` as configured.
    pub fn from_config(
        users: usize,
        items: usize,
        features: usize,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        let dims = Dims::new(users, items, config.dim, features)?;
        let model = Model::new(dims, config.model_config(), config.seed)?;
        let optimizer = Optimizer::new(config.optimizer, &dims, config.learning_rate);
        Ok(Self::new(model, optimizer))
    }

    /// Continues from a saved model and optimizer state.
    pub fn resume(model: Model, optimizer: Optimizer, epochs_done: usize) -> Self {
        Trainer {
            epochs_done,
            ..Self::new(model, optimizer)
        }
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// Processes one event; in train mode the parameters take one optimizer
    /// step on that event's loss before the states are committed.
    pub fn event_step(&mut self, e: &Interaction, mode: Mode) -> Result<f64> {
        let tape = self.model.forward(e)?;
        if mode == Mode::Train {
            self.grads.fill(0.0);
            self.model
                .backward(&self.model.params, &tape, &mut self.grads);
            self.optimizer.step(&mut self.model.params, &self.grads);
        }
        self.model.commit(&tape)?;
        Ok(tape.loss)
    }

    /// Sweeps `events` once from freshly reset dynamic state.
    pub fn train_epoch(&mut self, events: &[Interaction], mode: Mode) -> Result<EpochSummary> {
        if events.is_empty() {
            return Err(IacnError::Empty("no events to train on".into()));
        }
        self.model.reset_dynamic();
        let start = Instant::now();
        let mut total = 0.0;
        for e in events {
            total += self.event_step(e, mode)?;
        }
        let wall_secs = start.elapsed().as_secs_f64();
        if mode == Mode::Train {
            self.epochs_done += 1;
        }
        Ok(EpochSummary {
            epoch: self.epochs_done,
            mean_loss: total / events.len() as f64,
            events_per_sec: events.len() as f64 / wall_secs.max(1e-12),
            wall_secs,
        })
    }

    /// Replays `events` without parameter updates, continuing from the
    /// current state.
    pub fn replay(&mut self, events: &[Interaction]) -> Result<f64> {
        let mut total = 0.0;
        for e in events {
            total += self.event_step(e, Mode::Frozen)?;
        }
        Ok(total / events.len().max(1) as f64)
    }
}
