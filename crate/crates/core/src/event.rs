//! Temporal interaction logs: data model, CSV ingestion, per-entity history
//! lookups, time normalisation and descriptive statistics.

use std::collections::HashMap;
use std::io::Read;

use crate::error::{IacnError, Result};

pub type UserId = usize;
pub type ItemId = usize;

/// One observed event `(user, item, time, features)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: UserId,
    pub item: ItemId,
    pub time: f64,
    pub features: Vec<f64>,
}

impl Interaction {
    pub fn new(user: UserId, item: ItemId, time: f64, features: Vec<f64>) -> Self {
        Interaction {
            user,
            item,
            time,
            features,
        }
    }
}

/// A chronologically ordered interaction sequence with per-user and per-item
/// indices. Immutable once built.
#[derive(Debug, Clone)]
pub struct EventLog {
    events: Vec<Interaction>,
    num_users: usize,
    num_items: usize,
    num_features: usize,
    time_scale: f64,
    user_index: Vec<Vec<usize>>,
    item_index: Vec<Vec<usize>>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
}

impl EventLog {
    /// Builds a log from dense-id events. Events are stably sorted by time.
    /// `num_users` / `num_items` may exceed the ids actually present.
    pub fn from_events(
        mut events: Vec<Interaction>,
        num_users: usize,
        num_items: usize,
        num_features: usize,
    ) -> Result<Self> {
        for (k, e) in events.iter().enumerate() {
            if !(e.time >= 0.0) || !e.time.is_finite() {
                return Err(IacnError::InvalidArgument(format!(
                    "event {k}: timestamp {} is not a nonnegative finite number",
                    e.time
                )));
            }
            if e.user >= num_users || e.item >= num_items {
                return Err(IacnError::InvalidArgument(format!(
                    "event {k}: id out of range (user {} of {num_users}, item {} of {num_items})",
                    e.user, e.item
                )));
            }
            if e.features.len() != num_features {
                return Err(IacnError::DimensionMismatch {
                    context: "interaction features",
                    expected: num_features,
                    actual: e.features.len(),
                });
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let user_ids = (0..num_users).map(|u| u.to_string()).collect();
        let item_ids = (0..num_items).map(|i| i.to_string()).collect();
        Ok(Self::assemble(
            events,
            num_users,
            num_items,
            num_features,
            1.0,
            user_ids,
            item_ids,
        ))
    }

    fn assemble(
        events: Vec<Interaction>,
        num_users: usize,
        num_items: usize,
        num_features: usize,
        time_scale: f64,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
    ) -> Self {
        let mut user_index = vec![Vec::new(); num_users];
        let mut item_index = vec![Vec::new(); num_items];
        for (k, e) in events.iter().enumerate() {
            user_index[e.user].push(k);
            item_index[e.item].push(k);
        }
        EventLog {
            events,
            num_users,
            num_items,
            num_features,
            time_scale,
            user_index,
            item_index,
            user_ids,
            item_ids,
        }
    }

    pub fn events(&self) -> &[Interaction] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Factor that raw timestamps were divided by (1 when never normalised).
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Original id string of a dense user id.
    pub fn user_label(&self, u: UserId) -> &str {
        &self.user_ids[u]
    }

    pub fn item_label(&self, i: ItemId) -> &str {
        &self.item_ids[i]
    }

    pub fn user_labels(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_labels(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_by_label(&self, label: &str) -> Option<UserId> {
        self.user_ids.iter().position(|s| s == label)
    }

    pub fn item_by_label(&self, label: &str) -> Option<ItemId> {
        self.item_ids.iter().position(|s| s == label)
    }

    /// Event indices of user `u`, chronological.
    pub fn user_events(&self, u: UserId) -> &[usize] {
        &self.user_index[u]
    }

    pub fn item_events(&self, i: ItemId) -> &[usize] {
        &self.item_index[i]
    }

    /// The most recent `min(cap, |O^u(t)|)` events of `u` strictly before `t`,
    /// oldest first.
    pub fn user_history(&self, u: UserId, t: f64, cap: usize) -> Vec<&Interaction> {
        self.history_of(&self.user_index[u], t, cap)
    }

    /// Item-side counterpart of [`EventLog::user_history`].
    pub fn item_history(&self, i: ItemId, t: f64, cap: usize) -> Vec<&Interaction> {
        self.history_of(&self.item_index[i], t, cap)
    }

    fn history_of(&self, index: &[usize], t: f64, cap: usize) -> Vec<&Interaction> {
        let end = index.partition_point(|&k| self.events[k].time < t);
        let start = end.saturating_sub(cap);
        index[start..end].iter().map(|&k| &self.events[k]).collect()
    }

    /// Fraction of events (each user's first excluded) whose item repeats the
    /// user's previous item.
    pub fn repetition_rate(&self) -> Result<f64> {
        let mut eligible = 0usize;
        let mut repeats = 0usize;
        for idx in &self.user_index {
            for w in idx.windows(2) {
                eligible += 1;
                if self.events[w[0]].item == self.events[w[1]].item {
                    repeats += 1;
                }
            }
        }
        if eligible == 0 {
            return Err(IacnError::Empty(
                "repetition rate needs a user with at least two events".into(),
            ));
        }
        Ok(repeats as f64 / eligible as f64)
    }

    /// Rescales timestamps so the global mean inter-event gap is 1.
    pub fn normalize_time(&self) -> Result<EventLog> {
        if self.events.len() < 2 {
            return Err(IacnError::Empty(
                "time normalisation needs at least two events".into(),
            ));
        }
        let span = self.events[self.events.len() - 1].time - self.events[0].time;
        let mean_gap = span / (self.events.len() - 1) as f64;
        if !(mean_gap > 0.0) {
            return Err(IacnError::InvalidArgument(
                "all timestamps identical; mean gap is zero".into(),
            ));
        }
        Ok(self.rescaled(mean_gap))
    }

    /// Divides all timestamps by `scale`, composing with any earlier scaling.
    pub fn rescaled(&self, scale: f64) -> EventLog {
        let events = self
            .events
            .iter()
            .map(|e| Interaction {
                time: e.time / scale,
                ..e.clone()
            })
            .collect();
        Self::assemble(
            events,
            self.num_users,
            self.num_items,
            self.num_features,
            self.time_scale * scale,
            self.user_ids.clone(),
            self.item_ids.clone(),
        )
    }

    /// Contiguous sub-log `events[range]`, sharing the id space of `self`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> EventLog {
        Self::assemble(
            self.events[range].to_vec(),
            self.num_users,
            self.num_items,
            self.num_features,
            self.time_scale,
            self.user_ids.clone(),
            self.item_ids.clone(),
        )
    }

    /// Keeps the `top_items` most active items and then the users with at
    /// least `min_user_events` interactions on them; ids are re-densified.
    pub fn filter_active(&self, top_items: usize, min_user_events: usize) -> EventLog {
        let mut item_order: Vec<ItemId> = (0..self.num_items).collect();
        item_order.sort_by(|&a, &b| {
            self.item_index[b]
                .len()
                .cmp(&self.item_index[a].len())
                .then(a.cmp(&b))
        });
        let mut keep_item = vec![false; self.num_items];
        for &i in item_order.iter().take(top_items) {
            keep_item[i] = true;
        }
        let mut user_count = vec![0usize; self.num_users];
        for e in &self.events {
            if keep_item[e.item] {
                user_count[e.user] += 1;
            }
        }
        let kept: Vec<&Interaction> = self
            .events
            .iter()
            .filter(|e| keep_item[e.item] && user_count[e.user] >= min_user_events)
            .collect();

        let mut user_map: HashMap<UserId, UserId> = HashMap::new();
        let mut item_map: HashMap<ItemId, ItemId> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut events = Vec::with_capacity(kept.len());
        for e in kept {
            let u = *user_map.entry(e.user).or_insert_with(|| {
                user_ids.push(self.user_ids[e.user].clone());
                user_ids.len() - 1
            });
            let i = *item_map.entry(e.item).or_insert_with(|| {
                item_ids.push(self.item_ids[e.item].clone());
                item_ids.len() - 1
            });
            events.push(Interaction {
                user: u,
                item: i,
                time: e.time,
                features: e.features.clone(),
            });
        }
        let (m, n) = (user_ids.len(), item_ids.len());
        Self::assemble(
            events,
            m,
            n,
            self.num_features,
            self.time_scale,
            user_ids,
            item_ids,
        )
    }

    /// Reads the CSV wire format
    /// `user_id,item_id,timestamp[,state_label],feature_0,...`.
    ///
    /// The feature count is taken from the first data row; a `state_label`
    /// fourth header column is skipped. Ids are remapped densely in order of
    /// first appearance in the file.
    pub fn parse_csv<R: Read>(source: R) -> Result<EventLog> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.len() < 3 {
            return Err(IacnError::Parse {
                line: 1,
                msg: format!(
                    "header has {} columns; expected user_id,item_id,timestamp,...",
                    headers.len()
                ),
            });
        }
        let has_label = headers
            .get(3)
            .is_some_and(|h| h.eq_ignore_ascii_case("state_label"));
        let feature_start = if has_label { 4 } else { 3 };

        let mut user_map: HashMap<String, UserId> = HashMap::new();
        let mut item_map: HashMap<String, ItemId> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut events = Vec::new();
        let mut num_features: Option<usize> = None;

        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                csv_error(e, line)
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() == 1 && record.get(0) == Some("") {
                continue;
            }
            if record.len() < feature_start {
                return Err(IacnError::Parse {
                    line,
                    msg: format!(
                        "expected at least {feature_start} columns, found {}",
                        record.len()
                    ),
                });
            }
            let f = record.len() - feature_start;
            match num_features {
                None => num_features = Some(f),
                Some(expected) if expected != f => {
                    return Err(IacnError::Format {
                        line,
                        msg: format!("expected {expected} feature columns, found {f}"),
                    })
                }
                _ => {}
            }
            let time: f64 = record[2].parse().map_err(|_| IacnError::Parse {
                line,
                msg: format!("timestamp {:?} is not a number", &record[2]),
            })?;
            if !(time >= 0.0) || !time.is_finite() {
                return Err(IacnError::Parse {
                    line,
                    msg: format!("timestamp {time} must be a nonnegative finite number"),
                });
            }
            let features = (feature_start..record.len())
                .map(|c| {
                    record[c].parse::<f64>().map_err(|_| IacnError::Parse {
                        line,
                        msg: format!(
                            "feature column {} value {:?} is not a number",
                            c, &record[c]
                        ),
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            let next_user = user_ids.len();
            let user = *user_map.entry(record[0].to_string()).or_insert(next_user);
            if user == next_user {
                user_ids.push(record[0].to_string());
            }
            let next_item = item_ids.len();
            let item = *item_map.entry(record[1].to_string()).or_insert(next_item);
            if item == next_item {
                item_ids.push(record[1].to_string());
            }
            events.push(Interaction {
                user,
                item,
                time,
                features,
            });
        }

        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let (m, n) = (user_ids.len(), item_ids.len());
        Ok(Self::assemble(
            events,
            m,
            n,
            num_features.unwrap_or(0),
            1.0,
            user_ids,
            item_ids,
        ))
    }

    /// Writes the log in the CSV wire format, with a zero `state_label`
    /// column and timestamps in the log's current units.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        write!(out, "user_id,item_id,timestamp,state_label")?;
        for f in 0..self.num_features {
            write!(out, ",feature_{f}")?;
        }
        writeln!(out)?;
        for e in &self.events {
            write!(
                out,
                "{},{},{},0",
                self.user_ids[e.user], self.item_ids[e.item], e.time
            )?;
            for x in &e.features {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error, line: u64) -> IacnError {
    IacnError::Parse {
        line,
        msg: e.to_string(),
    }
}
