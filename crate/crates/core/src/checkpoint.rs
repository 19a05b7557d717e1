//! Versioned little-endian binary checkpoints.
//!
//! Layout: magic, format version, then the model (dimensions, config,
//! parameters, dynamic state, histories, neighborhoods), the optimizer state,
//! and a trailer holding the first 8 bytes of the SHA-256 of everything
//! before it.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use sha2::{Digest, Sha256};

use crate::error::{IacnError, Result};
use crate::linalg::Matrix;
use crate::model::{Ablation, EmptyInfluence, HistoryEntry, Model, ModelConfig};
use crate::neighborhood::{NeighborEvent, NeighborhoodState};
use crate::state::{Dims, DynamicInit, DynamicState, Params, PARAM_BLOCK_NAMES};
use crate::train::{Adam, Optimizer, Trainer};

const MAGIC: &[u8; 8] = b"IACNCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// A trained model with its optimizer, epoch count and the time unit of the
/// log it was trained on.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub optimizer: Optimizer,
    pub epochs_done: usize,
    /// Raw time units per model time unit.
    pub time_scale: f64,
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer, time_scale: f64) -> Self {
        Checkpoint {
            model: trainer.model.clone(),
            optimizer: trainer.optimizer.clone(),
            epochs_done: trainer.epochs_done(),
            time_scale,
        }
    }

    pub fn into_trainer(self) -> Trainer {
        Trainer::resume(self.model, self.optimizer, self.epochs_done)
    }

    /// Errors unless the checkpoint was built for these dimensions.
    pub fn ensure_shape(&self, users: usize, items: usize, features: usize) -> Result<()> {
        let d = &self.model.dims;
        if (d.users, d.items, d.features) != (users, items, features) {
            return Err(IacnError::ShapeMismatch(format!(
                "checkpoint has {} users, {} items, {} features; data has {users}, {items}, {features}",
                d.users, d.items, d.features
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        write_model(&mut w, &self.model);
        w.u64(self.epochs_done as u64);
        w.f64(self.time_scale);
        write_optimizer(&mut w, &self.optimizer);
        let digest = Sha256::digest(&w.0);
        w.0.extend_from_slice(&digest[..8]);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 + 8 {
            return Err(IacnError::Checkpoint("file too short".into()));
        }
        if &bytes[..8] != MAGIC {
            return Err(IacnError::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 8);
        if Sha256::digest(body)[..8] != *trailer {
            return Err(IacnError::Checkpoint(
                "checksum mismatch; file is corrupt".into(),
            ));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(IacnError::Checkpoint(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let model = read_model(&mut r)?;
        let epochs_done = r.usize()?;
        let time_scale = r.f64()?;
        let optimizer = read_optimizer(&mut r, &model.dims)?;
        if r.pos != body.len() {
            return Err(IacnError::Checkpoint(format!(
                "{} trailing bytes after payload",
                body.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            model,
            optimizer,
            epochs_done,
            time_scale,
        })
    }

    /// Hex SHA-256 prefix of the dimensions, seed and model configuration.
    pub fn config_hash(&self) -> String {
        let mut w = Writer(Vec::new());
        let d = &self.model.dims;
        for x in [d.users, d.items, d.dim, d.features] {
            w.usize(x);
        }
        w.u64(self.model.seed);
        write_config(&mut w, &self.model.config);
        Sha256::digest(&w.0)[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }
    fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        for x in v {
            self.f64(*x);
        }
    }
    fn opt_f64(&mut self, v: Option<f64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.f64(x);
            }
            None => self.u8(0),
        }
    }
    fn opt_usize(&mut self, v: Option<usize>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.usize(x);
            }
            None => self.u8(0),
        }
    }
    fn matrix(&mut self, m: &Matrix) {
        self.usize(m.rows());
        self.usize(m.cols());
        for x in m.as_slice() {
            self.f64(*x);
        }
    }
    fn params(&mut self, p: &Params) {
        for (name, block) in p.blocks() {
            self.usize(name.len());
            self.0.extend_from_slice(name.as_bytes());
            self.f64s(block);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() - self.pos < n {
            return Err(IacnError::Checkpoint(format!(
                "truncated at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| IacnError::Checkpoint("length overflows usize".into()))
    }
    /// A length that must still fit in the remaining bytes at `unit` bytes each.
    fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(unit) > self.buf.len() - self.pos {
            return Err(IacnError::Checkpoint(format!(
                "implausible length {n} at byte {}",
                self.pos
            )));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(IacnError::Checkpoint(format!("invalid flag byte {b}"))),
        }
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn f64s_exact(&mut self, expected: usize, what: &str) -> Result<Vec<f64>> {
        let v = self.f64s()?;
        if v.len() != expected {
            return Err(IacnError::Checkpoint(format!(
                "{what}: expected {expected} values, found {}",
                v.len()
            )));
        }
        Ok(v)
    }
    fn opt_f64(&mut self) -> Result<Option<f64>> {
        Ok(if self.bool()? {
            Some(self.f64()?)
        } else {
            None
        })
    }
    fn opt_usize(&mut self) -> Result<Option<usize>> {
        Ok(if self.bool()? {
            Some(self.usize()?)
        } else {
            None
        })
    }
    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
        let (r, c) = (self.usize()?, self.usize()?);
        if (r, c) != (rows, cols) {
            return Err(IacnError::Checkpoint(format!(
                "{what}: expected {rows}×{cols}, found {r}×{c}"
            )));
        }
        let data = (0..r * c).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_vec(r, c, data))
    }
    fn params(&mut self, dims: &Dims) -> Result<Params> {
        let mut p = Params::zeros(dims);
        for (k, (name, block)) in p.blocks_mut().into_iter().enumerate() {
            let len = self.len(1)?;
            let got = self.take(len)?;
            if got != name.as_bytes() || name != PARAM_BLOCK_NAMES[k] {
                return Err(IacnError::Checkpoint(format!(
                    "parameter block {k}: expected {name}, found {}",
                    String::from_utf8_lossy(got)
                )));
            }
            let values = self.f64s_exact(block.len(), name)?;
            block.copy_from_slice(&values);
        }
        Ok(p)
    }
    fn id(&mut self, bound: usize, what: &str) -> Result<usize> {
        let v = self.usize()?;
        if v >= bound {
            return Err(IacnError::Checkpoint(format!(
                "{what} id {v} out of range 0..{bound}"
            )));
        }
        Ok(v)
    }
}

fn write_history(w: &mut Writer, h: &VecDeque<HistoryEntry>) {
    w.usize(h.len());
    for e in h {
        w.f64(e.time);
        w.f64s(&e.embedding);
        w.f64s(&e.features);
    }
}

fn read_history(r: &mut Reader, dims: &Dims) -> Result<VecDeque<HistoryEntry>> {
    let n = r.len(24)?;
    (0..n)
        .map(|_| {
            Ok(HistoryEntry {
                time: r.f64()?,
                embedding: r.f64s_exact(dims.dim, "history embedding")?,
                features: r.f64s_exact(dims.features, "history features")?,
            })
        })
        .collect()
}

fn write_config(w: &mut Writer, c: &ModelConfig) {
    w.usize(c.history_cap);
    w.opt_usize(c.neighborhood_cap);
    w.usize(c.window_cap);
    w.u8(match c.ablation {
        Ablation::None => 0,
        Ablation::InfluenceOff => 1,
        Ablation::LatentCross => 2,
    });
    w.bool(c.share_item_attention);
    w.bool(c.influence_softmax);
    w.bool(c.empty_influence == EmptyInfluence::Hold);
    match c.dyn_init {
        DynamicInit::Zero => w.u8(0),
        DynamicInit::Random { scale } => {
            w.u8(1);
            w.f64(scale);
        }
    }
    w.f64(c.lambda_user);
    w.f64(c.lambda_item);
}

fn write_model(w: &mut Writer, m: &Model) {
    let d = &m.dims;
    for x in [d.users, d.items, d.dim, d.features] {
        w.usize(x);
    }
    w.u64(m.seed);
    w.u64(m.processed);
    write_config(w, &m.config);

    w.params(&m.params);

    let s = &m.state;
    w.matrix(&s.user_dyn);
    w.matrix(&s.item_dyn);
    for t in s.user_last_t.iter().chain(&s.item_last_t) {
        w.opt_f64(*t);
    }
    for i in &s.user_last_item {
        w.opt_usize(*i);
    }

    for h in m.user_hist.iter().chain(&m.item_hist) {
        write_history(w, h);
    }

    let nb = &m.neighborhood;
    w.f64(nb.now);
    for set in &nb.neighbors {
        w.usize(set.len());
        for &v in set {
            w.usize(v);
        }
    }
    for visitors in &nb.item_visitors {
        w.usize(visitors.len());
        for (&u, &t) in visitors {
            w.usize(u);
            w.f64(t);
        }
    }
    for (recent, last) in nb.recent.iter().zip(&nb.last_time) {
        w.opt_f64(*last);
        w.usize(recent.len());
        for e in recent {
            w.usize(e.neighbor);
            w.f64(e.time);
            w.f64s(&e.payload);
        }
    }
}

fn read_model(r: &mut Reader) -> Result<Model> {
    let (users, items, dim, features) = (r.usize()?, r.usize()?, r.usize()?, r.usize()?);
    let dims = Dims::new(users, items, dim, features)
        .map_err(|e| IacnError::Checkpoint(format!("invalid dimensions: {e}")))?;
    let seed = r.u64()?;
    let processed = r.u64()?;

    let history_cap = r.usize()?;
    let neighborhood_cap = r.opt_usize()?;
    let window_cap = r.usize()?;
    let ablation = match r.u8()? {
        0 => Ablation::None,
        1 => Ablation::InfluenceOff,
        2 => Ablation::LatentCross,
        b => return Err(IacnError::Checkpoint(format!("unknown ablation tag {b}"))),
    };
    let share_item_attention = r.bool()?;
    let influence_softmax = r.bool()?;
    let empty_influence = if r.bool()? {
        EmptyInfluence::Hold
    } else {
        EmptyInfluence::Decay
    };
    let dyn_init = match r.u8()? {
        0 => DynamicInit::Zero,
        1 => DynamicInit::Random { scale: r.f64()? },
        b => return Err(IacnError::Checkpoint(format!("unknown init tag {b}"))),
    };
    let config = ModelConfig {
        history_cap,
        neighborhood_cap,
        window_cap,
        ablation,
        share_item_attention,
        influence_softmax,
        empty_influence,
        dyn_init,
        lambda_user: r.f64()?,
        lambda_item: r.f64()?,
    };

    let params = r.params(&dims)?;

    let user_dyn = r.matrix(users, dim, "user embeddings")?;
    let item_dyn = r.matrix(items, dim, "item embeddings")?;
    let user_last_t = (0..users)
        .map(|_| r.opt_f64())
        .collect::<Result<Vec<_>>>()?;
    let item_last_t = (0..items)
        .map(|_| r.opt_f64())
        .collect::<Result<Vec<_>>>()?;
    let mut user_last_item = Vec::with_capacity(users);
    for _ in 0..users {
        let v = r.opt_usize()?;
        if v.is_some_and(|i| i >= items) {
            return Err(IacnError::Checkpoint("last item out of range".into()));
        }
        user_last_item.push(v);
    }
    let state = DynamicState {
        user_dyn,
        item_dyn,
        user_last_t,
        item_last_t,
        user_last_item,
    };

    let mut model = Model::with_parts(dims, config, seed, params, state);
    model.processed = processed;
    for u in 0..users {
        model.user_hist[u] = read_history(r, &dims)?;
    }
    for i in 0..items {
        model.item_hist[i] = read_history(r, &dims)?;
    }

    let nb = &mut model.neighborhood;
    nb.now = r.f64()?;
    for u in 0..users {
        let n = r.len(8)?;
        let mut set = IndexSet::with_capacity(n);
        for _ in 0..n {
            set.insert(r.id(users, "neighbor")?);
        }
        nb.neighbors[u] = set;
    }
    for i in 0..items {
        let n = r.len(16)?;
        let mut map = IndexMap::with_capacity(n);
        for _ in 0..n {
            let u = r.id(users, "visitor")?;
            map.insert(u, r.f64()?);
        }
        nb.item_visitors[i] = map;
    }
    for u in 0..users {
        nb.last_time[u] = r.opt_f64()?;
        let n = r.len(24)?;
        let mut recent = VecDeque::with_capacity(n);
        for _ in 0..n {
            recent.push_back(NeighborEvent {
                neighbor: r.id(users, "neighbor event")?,
                time: r.f64()?,
                payload: Arc::from(r.f64s_exact(dim, "neighbor snapshot")?),
            });
        }
        nb.recent[u] = recent;
    }
    nb.rebuild_followers();
    Ok(model)
}

fn write_optimizer(w: &mut Writer, opt: &Optimizer) {
    match opt {
        Optimizer::Adam(a) => {
            w.u8(0);
            for x in [a.lr, a.beta1, a.beta2, a.eps] {
                w.f64(x);
            }
            w.u64(a.t);
            w.params(&a.m);
            w.params(&a.v);
        }
        Optimizer::Sgd { lr } => {
            w.u8(1);
            w.f64(*lr);
        }
    }
}

fn read_optimizer(r: &mut Reader, dims: &Dims) -> Result<Optimizer> {
    match r.u8()? {
        0 => {
            let mut a = Adam::new(dims, r.f64()?);
            a.beta1 = r.f64()?;
            a.beta2 = r.f64()?;
            a.eps = r.f64()?;
            a.t = r.u64()?;
            a.m = r.params(dims)?;
            a.v = r.params(dims)?;
            Ok(Optimizer::Adam(a))
        }
        1 => Ok(Optimizer::Sgd { lr: r.f64()? }),
        b => Err(IacnError::Checkpoint(format!("unknown optimizer tag {b}"))),
    }
}

/// Membership-only copy of a model's neighborhoods, for statistics.
pub fn neighborhood_membership(model: &Model) -> NeighborhoodState<()> {
    let nb = &model.neighborhood;
    NeighborhoodState {
        neighbors: nb.neighbors.clone(),
        followers: nb.followers.clone(),
        item_visitors: nb.item_visitors.clone(),
        recent: vec![VecDeque::new(); nb.num_users()],
        last_time: nb.last_time.clone(),
        now: nb.now,
        cap: nb.cap,
        track_events: false,
    }
}
