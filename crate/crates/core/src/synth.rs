//! Synthetic interaction logs with planted user-to-user influence.
//!
//! Each (user, item) pair is a self-exciting point process
//!
//! ```text
//! λ_{u,i}(t) = μ·pref(u,i) + Σ_{v→u} w_{vu} Σ_{t_v < t, v on i} exp(-ρ (t - t_v))
//! ```
//!
//! sampled exactly by Ogata thinning. Because every excitation term decays
//! at the same rate, the total intensity never increases between events,
//! so its value at the current time bounds it until the next acceptance.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Gamma};

use crate::error::{IacnError, Result};
use crate::event::{EventLog, Interaction, ItemId, UserId};
use crate::linalg::Matrix;

/// Planted edge: events of `src` excite `dst` on the same item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: UserId,
    pub dst: UserId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub events: usize,
    pub edges: Vec<Edge>,
    /// ρ
    pub decay: f64,
    /// μ
    pub base_rate: f64,
    /// `users × items`, nonnegative.
    pub preference: Matrix,
    pub seed: u64,
}

/// Knobs for drawing a random [`SynthConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSynth {
    pub users: usize,
    pub items: usize,
    pub events: usize,
    pub num_edges: usize,
    pub edge_weight: f64,
    pub decay: f64,
    pub base_rate: f64,
    /// Gamma shape of the per-user preference draws; small values
    /// concentrate each user on few items.
    pub concentration: f64,
}

impl Default for RandomSynth {
    fn default() -> Self {
        RandomSynth {
            users: 500,
            items: 100,
            events: 20_000,
            num_edges: 1_000,
            edge_weight: 0.1,
            decay: 0.5,
            base_rate: 0.01,
            concentration: 0.005,
        }
    }
}

impl SynthConfig {
    /// Random preferences (normalised Gamma draws per user) and
    /// `num_edges` distinct planted edges without self-loops.
    pub fn random(spec: &RandomSynth, seed: u64) -> Result<Self> {
        let RandomSynth {
            users,
            items,
            events,
            num_edges,
            edge_weight,
            decay,
            base_rate,
            concentration,
        } = *spec;
        if users == 0 || items == 0 {
            return Err(IacnError::InvalidArgument(
                "users and items must be positive".into(),
            ));
        }
        if num_edges > users * (users - 1) {
            return Err(IacnError::InvalidArgument(format!(
                "{num_edges} distinct edges do not fit among {users} users"
            )));
        }
        let gamma = Gamma::new(concentration, 1.0).map_err(|e| {
            IacnError::InvalidArgument(format!("concentration {concentration}: {e}"))
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut preference = Matrix::zeros(users, items);
        for u in 0..users {
            let row = preference.row_mut(u);
            let mut total = 0.0;
            while total <= 0.0 {
                for x in row.iter_mut() {
                    *x = gamma.sample(&mut rng);
                }
                total = row.iter().sum();
            }
            row.iter_mut().for_each(|x| *x /= total);
        }
        let mut chosen = std::collections::BTreeSet::new();
        let mut edges = Vec::with_capacity(num_edges);
        while edges.len() < num_edges {
            let src = rng.random_range(0..users);
            let dst = rng.random_range(0..users);
            if src != dst && chosen.insert((src, dst)) {
                edges.push(Edge {
                    src,
                    dst,
                    weight: edge_weight,
                });
            }
        }
        Ok(SynthConfig {
            users,
            items,
            events,
            edges,
            decay,
            base_rate,
            preference,
            seed,
        })
    }

    /// The same process with the influence graph removed.
    pub fn without_influence(&self) -> Self {
        SynthConfig {
            edges: Vec::new(),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.preference.rows() != self.users || self.preference.cols() != self.items {
            return Err(IacnError::DimensionMismatch {
                context: "preference matrix",
                expected: self.users * self.items,
                actual: self.preference.rows() * self.preference.cols(),
            });
        }
        if !(self.decay > 0.0) {
            return Err(IacnError::InvalidArgument(format!(
                "decay must be positive, got {}",
                self.decay
            )));
        }
        if self.preference.as_slice().iter().any(|p| !(*p >= 0.0)) {
            return Err(IacnError::InvalidArgument(
                "preferences must be nonnegative".into(),
            ));
        }
        let base_total: f64 = self.preference.as_slice().iter().sum::<f64>() * self.base_rate;
        if !(self.base_rate > 0.0 && base_total > 0.0 && base_total.is_finite()) {
            return Err(IacnError::InvalidArgument(
                "base intensity is zero everywhere; no event can ever occur".into(),
            ));
        }
        for e in &self.edges {
            if e.src >= self.users || e.dst >= self.users {
                return Err(IacnError::InvalidArgument(format!(
                    "edge {}→{} out of range 0..{}",
                    e.src, e.dst, self.users
                )));
            }
            if e.src == e.dst {
                return Err(IacnError::InvalidArgument(format!(
                    "self-loop on user {}",
                    e.src
                )));
            }
            if !(e.weight > 0.0) {
                return Err(IacnError::InvalidArgument(format!(
                    "edge {}→{} weight must be positive",
                    e.src, e.dst
                )));
            }
        }
        Ok(())
    }
}

/// Draws exactly `config.events` events. Returns the log and the planted
/// edges.
pub fn generate(config: &SynthConfig) -> Result<(EventLog, Vec<Edge>)> {
    config.validate()?;
    let (m, n) = (config.users, config.items);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let user_mass: Vec<f64> = (0..m)
        .map(|u| config.preference.row(u).iter().sum::<f64>())
        .collect();
    let base_total = config.base_rate * user_mass.iter().sum::<f64>();
    let user_pick =
        WeightedIndex::new(&user_mass).map_err(|e| IacnError::InvalidArgument(e.to_string()))?;
    let item_pick: Vec<Option<WeightedIndex<f64>>> = (0..m)
        .map(|u| WeightedIndex::new(config.preference.row(u)).ok())
        .collect();
    let mut out_edges: Vec<Vec<(UserId, f64)>> = vec![Vec::new(); m];
    for e in &config.edges {
        out_edges[e.src].push((e.dst, e.weight));
    }

    // Excitation of each (user, item) pair as of `t_ref`.
    let mut excitation: BTreeMap<(UserId, ItemId), f64> = BTreeMap::new();
    let mut exc_total = 0.0;
    let mut t_ref = 0.0;
    let mut t = 0.0;
    let mut events = Vec::with_capacity(config.events);
    while events.len() < config.events {
        let bound = base_total + exc_total * (-config.decay * (t - t_ref)).exp();
        let step = Exp::new(bound)
            .map_err(|e| IacnError::InvalidArgument(e.to_string()))?
            .sample(&mut rng);
        t += step;
        let factor = (-config.decay * (t - t_ref)).exp();
        let intensity = base_total + exc_total * factor;
        if rng.random::<f64>() * bound > intensity {
            continue;
        }
        let x = rng.random::<f64>() * intensity;
        let (u, i) = if x < base_total || excitation.is_empty() {
            let u = user_pick.sample(&mut rng);
            let i = item_pick[u]
                .as_ref()
                .expect("user with base mass")
                .sample(&mut rng);
            (u, i)
        } else {
            let mut rest = (x - base_total) / factor;
            let mut pick = *excitation.keys().next_back().expect("nonempty");
            for (&key, &value) in &excitation {
                if rest < value {
                    pick = key;
                    break;
                }
                rest -= value;
            }
            pick
        };
        events.push(Interaction::new(u, i, t, Vec::new()));

        exc_total = 0.0;
        excitation.retain(|_, v| {
            *v *= factor;
            exc_total += *v;
            *v > 1e-12
        });
        for &(dst, w) in &out_edges[u] {
            *excitation.entry((dst, i)).or_insert(0.0) += w;
            exc_total += w;
        }
        t_ref = t;
    }
    let log = EventLog::from_events(events, m, n, 0)?;
    Ok((log, config.edges.clone()))
}

pub fn write_edges_csv<W: Write>(edges: &[Edge], mut out: W) -> std::io::Result<()> {
    writeln!(out, "src,dst,weight")?;
    for e in edges {
        writeln!(out, "{},{},{}", e.src, e.dst, e.weight)?;
    }
    Ok(())
}

/// Fraction of `dst`'s events whose item `src` interacted with during the
/// preceding `window` time units.
pub fn follow_fraction(log: &EventLog, src: UserId, dst: UserId, window: f64) -> f64 {
    let src_events: Vec<&Interaction> = log
        .user_events(src)
        .iter()
        .map(|&k| &log.events()[k])
        .collect();
    let dst_events = log.user_events(dst);
    if dst_events.is_empty() {
        return 0.0;
    }
    let hits = dst_events
        .iter()
        .filter(|&&k| {
            let e = &log.events()[k];
            let hi = src_events.partition_point(|s| s.time < e.time);
            src_events[..hi]
                .iter()
                .rev()
                .take_while(|s| s.time > e.time - window)
                .any(|s| s.item == e.item)
        })
        .count();
    hits as f64 / dst_events.len() as f64
}
