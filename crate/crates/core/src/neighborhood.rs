//! Local user neighborhoods inferred from shared items.
//!
//! When `u` touches item `i` at time `t`, every user who touched `i` strictly
//! before `t` joins `N_u`. Each user also keeps the timestamped events of the
//! users in its neighborhood, which feed the influence window.

use std::collections::VecDeque;

use indexmap::{IndexMap, IndexSet};

use crate::error::{IacnError, Result};
use crate::event::{Interaction, UserId};

/// One interaction by a neighbor, as seen from the owning user.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEvent<P> {
    pub neighbor: UserId,
    pub time: f64,
    pub payload: P,
}

#[derive(Debug, Clone)]
pub struct NeighborhoodState<P = ()> {
    pub(crate) neighbors: Vec<IndexSet<UserId>>,
    pub(crate) followers: Vec<IndexSet<UserId>>,
    /// Distinct visitors per item with their first visit time, in visit order.
    pub(crate) item_visitors: Vec<IndexMap<UserId, f64>>,
    pub(crate) recent: Vec<VecDeque<NeighborEvent<P>>>,
    pub(crate) last_time: Vec<Option<f64>>,
    pub(crate) now: f64,
    pub(crate) cap: Option<usize>,
    pub(crate) track_events: bool,
}

impl<P: Clone> NeighborhoodState<P> {
    /// `cap` bounds each neighborhood to its most recently added members
    /// (`None` is unbounded). With `track_events` off only the membership
    /// sets are maintained.
    pub fn new(num_users: usize, num_items: usize, cap: Option<usize>, track_events: bool) -> Self {
        NeighborhoodState {
            neighbors: vec![IndexSet::new(); num_users],
            followers: vec![IndexSet::new(); num_users],
            item_visitors: vec![IndexMap::new(); num_items],
            recent: vec![VecDeque::new(); num_users],
            last_time: vec![None; num_users],
            now: f64::NEG_INFINITY,
            cap,
            track_events,
        }
    }

    pub fn num_users(&self) -> usize {
        self.neighbors.len()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn neighbors(&self, u: UserId) -> impl Iterator<Item = UserId> + '_ {
        self.neighbors[u].iter().copied()
    }

    pub fn neighborhood_size(&self, u: UserId) -> usize {
        self.neighbors[u].len()
    }

    pub fn is_neighbor(&self, u: UserId, v: UserId) -> bool {
        self.neighbors[u].contains(&v)
    }

    pub fn last_time(&self, u: UserId) -> Option<f64> {
        self.last_time[u]
    }

    /// Applies one interaction. `payload` is attached to the event copies
    /// delivered to the users that have `o.user` as a neighbor.
    pub fn update(&mut self, o: &Interaction, payload: P) -> Result<()> {
        if o.time < self.now {
            return Err(IacnError::OutOfOrder {
                time: o.time,
                now: self.now,
            });
        }
        let u = o.user;
        let before: Vec<UserId> = self.item_visitors[o.item]
            .iter()
            .take_while(|(_, &first)| first < o.time)
            .map(|(&v, _)| v)
            .filter(|&v| v != u)
            .collect();
        for v in before {
            self.add_neighbor(u, v);
        }
        self.item_visitors[o.item].entry(u).or_insert(o.time);

        if self.track_events {
            for &w in &self.followers[u] {
                self.recent[w].push_back(NeighborEvent {
                    neighbor: u,
                    time: o.time,
                    payload: payload.clone(),
                });
            }
            // nothing at or before u's own latest interaction can enter a later window
            let own = &mut self.recent[u];
            while own.front().is_some_and(|e| e.time <= o.time) {
                own.pop_front();
            }
        }
        self.last_time[u] = Some(o.time);
        self.now = o.time;
        Ok(())
    }

    fn add_neighbor(&mut self, u: UserId, v: UserId) {
        if !self.neighbors[u].insert(v) {
            return;
        }
        self.followers[v].insert(u);
        if let Some(cap) = self.cap {
            while self.neighbors[u].len() > cap {
                if let Some(old) = self.neighbors[u].shift_remove_index(0) {
                    self.followers[old].shift_remove(&u);
                }
            }
        }
    }

    /// Recorded neighbor events `(v, t_v)` of `u` with `open < t_v < close`,
    /// oldest first.
    pub fn events_in_window(&self, u: UserId, open: f64, close: f64) -> Vec<&NeighborEvent<P>> {
        self.recent[u]
            .iter()
            .filter(|e| e.time > open && e.time < close)
            .collect()
    }

    /// Mean neighborhood size over all users (0 when there are none).
    pub fn avg_neighborhood_size(&self) -> f64 {
        if self.neighbors.is_empty() {
            return 0.0;
        }
        self.nonzero_influence_count() as f64 / self.neighbors.len() as f64
    }

    pub fn median_neighborhood_size(&self) -> f64 {
        let mut sizes: Vec<usize> = self.neighbors.iter().map(|s| s.len()).collect();
        if sizes.is_empty() {
            return 0.0;
        }
        sizes.sort_unstable();
        let k = sizes.len();
        if k % 2 == 1 {
            sizes[k / 2] as f64
        } else {
            (sizes[k / 2 - 1] + sizes[k / 2]) as f64 / 2.0
        }
    }

    /// Number of (v, u) pairs with `v ∈ N_u`, i.e. the possibly nonzero
    /// influence weights.
    pub fn nonzero_influence_count(&self) -> usize {
        self.neighbors.iter().map(|s| s.len()).sum()
    }

    pub(crate) fn rebuild_followers(&mut self) {
        for f in &mut self.followers {
            f.clear();
        }
        for (u, set) in self.neighbors.iter().enumerate() {
            for &v in set {
                self.followers[v].insert(u);
            }
        }
    }
}

/// Replays a log through a membership-only neighborhood.
pub fn replay_neighborhoods(
    log: &crate::event::EventLog,
    cap: Option<usize>,
) -> Result<NeighborhoodState<()>> {
    let mut state = NeighborhoodState::new(log.num_users(), log.num_items(), cap, false);
    for e in log.events() {
        state.update(e, ())?;
    }
    Ok(state)
}
