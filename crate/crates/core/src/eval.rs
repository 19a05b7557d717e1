//! Next-item evaluation over a chronological segment.

use std::io::Write;

use crate::error::{IacnError, Result};
use crate::event::{Interaction, ItemId, UserId};
use crate::metrics::{mrr, recall_at_k};
use crate::model::Model;
use crate::retrieval::{onehot_sq_distances, rank_from_distances, topk_from_distances, LshIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ranking {
    #[default]
    Exact,
    Lsh {
        tables: usize,
        bits: usize,
        seed: u64,
    },
}

impl Ranking {
    pub fn label(&self) -> String {
        match self {
            Ranking::Exact => "exact".into(),
            Ranking::Lsh { tables, bits, seed } => format!("lsh(L={tables},b={bits},seed={seed})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEvent {
    pub user: UserId,
    pub item: ItemId,
    pub time: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ablation: String,
    pub ranking: String,
    pub events: Vec<RankedEvent>,
    pub mrr: f64,
    pub recall10: f64,
}

impl EvalReport {
    pub fn from_events(ablation: &str, ranking: &str, events: Vec<RankedEvent>) -> Result<Self> {
        let ranks: Vec<usize> = events.iter().map(|e| e.rank).collect();
        Ok(EvalReport {
            ablation: ablation.to_string(),
            ranking: ranking.to_string(),
            mrr: mrr(&ranks)?,
            recall10: recall_at_k(&ranks, 10)?,
            events,
        })
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.rank).collect()
    }

    /// Tab-separated per-event ranks under a commented header. `labels`
    /// maps dense ids back to the log's external ids.
    pub fn write_tsv<W: Write>(
        &self,
        mut out: W,
        labels: Option<(&[String], &[String])>,
        time_scale: f64,
    ) -> std::io::Result<()> {
        writeln!(out, "# ablation\t{}", self.ablation)?;
        writeln!(out, "# ranking\t{}", self.ranking)?;
        writeln!(out, "# mrr\t{}", self.mrr)?;
        writeln!(out, "# recall10\t{}", self.recall10)?;
        writeln!(out, "# events\t{}", self.events.len())?;
        writeln!(out, "user\titem\ttimestamp\trank")?;
        for e in &self.events {
            match labels {
                Some((users, items)) => writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    users[e.user],
                    items[e.item],
                    e.time * time_scale,
                    e.rank
                )?,
                None => writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    e.user,
                    e.item,
                    e.time * time_scale,
                    e.rank
                )?,
            }
        }
        Ok(())
    }

    /// `key=value` lines.
    pub fn write_summary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "mrr={}", self.mrr)?;
        writeln!(out, "recall10={}", self.recall10)?;
        writeln!(out, "events={}", self.events.len())?;
        writeln!(out, "ablation={}", self.ablation)?;
        writeln!(out, "ranking={}", self.ranking)
    }
}

/// Query representation of the user's next item at `at`, plus the squared
/// distances to every current item representation.
pub fn score_items(model: &Model, user: UserId, at: f64) -> Result<Vec<f64>> {
    let q = model.query(user, at)?;
    onehot_sq_distances(&model.state.item_dyn, &q.predicted)
}

/// Top `k` items for `user` at `at` by exact distance.
pub fn recommend(model: &Model, user: UserId, at: f64, k: usize) -> Result<Vec<(ItemId, f64)>> {
    topk_from_distances(&score_items(model, user, at)?, k)
}

fn item_repr(model: &Model, item: ItemId) -> Vec<f64> {
    let mut v = vec![0.0; model.dims.items];
    v[item] = 1.0;
    v.extend_from_slice(model.state.item(item));
    v
}

/// Ranks each event's ground-truth item before observing it, then commits
/// the event with parameters frozen.
pub fn evaluate(model: &mut Model, events: &[Interaction], ranking: Ranking) -> Result<EvalReport> {
    if events.is_empty() {
        return Err(IacnError::Empty("no events to evaluate".into()));
    }
    if events[0].time < model.now() {
        return Err(IacnError::InvalidArgument(format!(
            "evaluation segment starts at {} but the model has already processed events up to {}",
            events[0].time,
            model.now()
        )));
    }
    let mut index = match ranking {
        Ranking::Exact => None,
        Ranking::Lsh { tables, bits, seed } => Some(LshIndex::build(
            &model.item_representations(),
            tables,
            bits,
            seed,
        )?),
    };
    let mut ranked = Vec::with_capacity(events.len());
    for e in events {
        let tape = model.forward(e)?;
        let rank = match &index {
            None => rank_from_distances(
                &onehot_sq_distances(&model.state.item_dyn, &tape.query.predicted)?,
                e.item,
            )?,
            Some(idx) => idx.rank_of(&tape.query.predicted, e.item)?,
        };
        ranked.push(RankedEvent {
            user: e.user,
            item: e.item,
            time: e.time,
            rank,
        });
        model.commit(&tape)?;
        if let Some(idx) = index.as_mut() {
            idx.update(e.item, &item_repr(model, e.item))?;
        }
    }
    EvalReport::from_events(model.config.ablation.label(), &ranking.label(), ranked)
}

/// Replays `warmup` with frozen parameters and then evaluates `events`.
pub fn replay_then_evaluate(
    model: &mut Model,
    warmup: &[Interaction],
    events: &[Interaction],
    ranking: Ranking,
) -> Result<EvalReport> {
    for e in warmup {
        model.observe(e)?;
    }
    evaluate(model, events, ranking)
}
