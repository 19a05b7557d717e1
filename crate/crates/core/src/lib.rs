//! Temporal co-evolutionary recommender with neighbor influence.
//!
//! Users and items carry dynamic embeddings updated by attention over their
//! interaction histories. Between a user's interactions, events of that
//! user's local neighborhood are folded in through a time-decayed influence
//! embedding, and the fused embedding predicts the next item.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod event;
pub mod fusion;
pub mod influence;
pub mod interaction;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod neighborhood;
pub mod retrieval;
pub mod state;
pub mod synth;
pub mod train;

pub use checkpoint::Checkpoint;
pub use error::{IacnError, Result};
pub use eval::{evaluate, recommend, replay_then_evaluate, EvalReport, Ranking};
pub use event::{EventLog, Interaction, ItemId, UserId};
pub use fusion::{
    fuse, latent_cross_fuse, predict_item_embedding, predict_item_embedding_cold, Prediction,
};
pub use influence::{influence_embedding, influence_weight, InfluenceInput, InfluenceRecord};
pub use interaction::{
    update_item_embedding, update_user_embedding, AttentionBreakdown, AttentionInput,
};
pub use linalg::Matrix;
pub use metrics::{mrr, recall_at_k};
pub use model::{step_loss, Ablation, EmptyInfluence, EventTape, Model, ModelConfig};
pub use neighborhood::{replay_neighborhoods, NeighborhoodState};
pub use retrieval::{exact_topk, LshIndex};
pub use state::{
    init_states, static_embedding, Dims, DynamicInit, DynamicState, EntityKind, Params,
    StaticEmbedding,
};
pub use synth::{generate, Edge, RandomSynth, SynthConfig};
pub use train::{
    chronological_split, Adam, EpochSummary, Mode, Optimizer, OptimizerKind, TrainConfig, Trainer,
};
