//! Embeddings and learnable parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{IacnError, Result};
use crate::event::{ItemId, UserId};
use crate::linalg::{softplus, softplus_inv, Matrix};

/// Population and embedding sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub users: usize,
    pub items: usize,
    pub dim: usize,
    pub features: usize,
}

impl Dims {
    pub fn new(users: usize, items: usize, dim: usize, features: usize) -> Result<Self> {
        if users == 0 || items == 0 || dim == 0 {
            return Err(IacnError::InvalidArgument(format!(
                "users, items and dim must be positive (got {users}, {items}, {dim})"
            )));
        }
        Ok(Dims {
            users,
            items,
            dim,
            features,
        })
    }

    /// Length of an item representation `[one-hot, dynamic]`.
    pub fn item_repr_len(&self) -> usize {
        self.items + self.dim
    }

    /// Length of the prediction input `[fused user, user one-hot, last item dyn, last item one-hot]`.
    pub fn pred_input_len(&self) -> usize {
        self.dim + self.users + self.dim + self.items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    User,
    Item,
}

/// A fixed one-hot identity vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StaticEmbedding {
    pub index: usize,
    pub len: usize,
}

impl StaticEmbedding {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        v[self.index] = 1.0;
        v
    }
}

pub fn static_embedding(kind: EntityKind, id: usize, dims: &Dims) -> Result<StaticEmbedding> {
    let len = match kind {
        EntityKind::User => dims.users,
        EntityKind::Item => dims.items,
    };
    if id >= len {
        return Err(IacnError::InvalidArgument(format!(
            "{kind:?} id {id} out of range 0..{len}"
        )));
    }
    Ok(StaticEmbedding { index: id, len })
}

/// Current dynamic embeddings and bookkeeping of the last interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub user_dyn: Matrix,
    pub item_dyn: Matrix,
    pub user_last_t: Vec<Option<f64>>,
    pub item_last_t: Vec<Option<f64>>,
    pub user_last_item: Vec<Option<ItemId>>,
}

impl DynamicState {
    pub fn user(&self, u: UserId) -> &[f64] {
        self.user_dyn.row(u)
    }

    pub fn item(&self, i: ItemId) -> &[f64] {
        self.item_dyn.row(i)
    }

    /// `[one-hot(i), item_dyn(i)]` for every item, as rows.
    pub fn item_representations(&self) -> Matrix {
        let n = self.item_dyn.rows();
        let d = self.item_dyn.cols();
        let mut reprs = Matrix::zeros(n, n + d);
        for i in 0..n {
            let row = reprs.row_mut(i);
            row[i] = 1.0;
            row[n..].copy_from_slice(self.item_dyn.row(i));
        }
        reprs
    }
}

/// How dynamic embeddings start out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicInit {
    Zero,
    /// Independent N(0, scale²/d) entries per row.
    Random {
        scale: f64,
    },
}

impl Default for DynamicInit {
    fn default() -> Self {
        DynamicInit::Random { scale: 1.0 }
    }
}

/// All learnable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// User-side attention: query transform of the user.
    pub w_user: Matrix,
    /// User-side attention: transform of history items (scores and values).
    pub w_item: Matrix,
    pub w_feat: Matrix,
    /// Item-side attention: transform of history users (scores and values).
    pub v_user: Matrix,
    /// Item-side attention: query transform of the item.
    pub v_item: Matrix,
    pub v_feat: Matrix,
    pub w_infl_neighbor: Matrix,
    pub w_infl_user: Matrix,
    /// Per-user decay rate before softplus.
    pub decay_raw: Vec<f64>,
    /// Per-user fusion rate before softplus.
    pub fusion_raw: Vec<f64>,
    pub w_pred: Matrix,
    pub b_pred: Vec<f64>,
    /// Time-context vector of the latent-cross fusion variant.
    pub w_ctx: Vec<f64>,
}

pub const PARAM_BLOCK_NAMES: [&str; 13] = [
    "w_user",
    "w_item",
    "w_feat",
    "v_user",
    "v_item",
    "v_feat",
    "w_infl_neighbor",
    "w_infl_user",
    "decay_raw",
    "fusion_raw",
    "w_pred",
    "b_pred",
    "w_ctx",
];

/// Raw value whose softplus is exactly 1.
pub fn unit_softplus_raw() -> f64 {
    let mut x = softplus_inv(1.0);
    // nudge by ulps until the forward map lands exactly on 1
    for _ in 0..8 {
        let y = softplus(x);
        if y == 1.0 {
            break;
        }
        x = if y > 1.0 {
            f64::from_bits(x.to_bits() - 1)
        } else {
            f64::from_bits(x.to_bits() + 1)
        };
    }
    x
}

impl Params {
    pub fn zeros(dims: &Dims) -> Self {
        let Dims {
            users: m,
            items: n,
            dim: d,
            features: f,
        } = *dims;
        Params {
            w_user: Matrix::zeros(d, d),
            w_item: Matrix::zeros(d, d),
            w_feat: Matrix::zeros(d, f),
            v_user: Matrix::zeros(d, d),
            v_item: Matrix::zeros(d, d),
            v_feat: Matrix::zeros(d, f),
            w_infl_neighbor: Matrix::zeros(d, d),
            w_infl_user: Matrix::zeros(d, d),
            decay_raw: vec![0.0; m],
            fusion_raw: vec![0.0; m],
            w_pred: Matrix::zeros(n + d, dims.pred_input_len()),
            b_pred: vec![0.0; n + d],
            w_ctx: vec![0.0; d],
        }
    }

    pub fn dims(&self) -> Dims {
        let d = self.w_user.rows();
        Dims {
            users: self.decay_raw.len(),
            items: self.b_pred.len() - d,
            dim: d,
            features: self.w_feat.cols(),
        }
    }

    pub fn decay(&self, u: UserId) -> f64 {
        softplus(self.decay_raw[u])
    }

    pub fn fusion_rate(&self, u: UserId) -> f64 {
        softplus(self.fusion_raw[u])
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 13] {
        [
            (PARAM_BLOCK_NAMES[0], self.w_user.as_slice()),
            (PARAM_BLOCK_NAMES[1], self.w_item.as_slice()),
            (PARAM_BLOCK_NAMES[2], self.w_feat.as_slice()),
            (PARAM_BLOCK_NAMES[3], self.v_user.as_slice()),
            (PARAM_BLOCK_NAMES[4], self.v_item.as_slice()),
            (PARAM_BLOCK_NAMES[5], self.v_feat.as_slice()),
            (PARAM_BLOCK_NAMES[6], self.w_infl_neighbor.as_slice()),
            (PARAM_BLOCK_NAMES[7], self.w_infl_user.as_slice()),
            (PARAM_BLOCK_NAMES[8], &self.decay_raw),
            (PARAM_BLOCK_NAMES[9], &self.fusion_raw),
            (PARAM_BLOCK_NAMES[10], self.w_pred.as_slice()),
            (PARAM_BLOCK_NAMES[11], &self.b_pred),
            (PARAM_BLOCK_NAMES[12], &self.w_ctx),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut [f64]); 13] {
        [
            (PARAM_BLOCK_NAMES[0], self.w_user.as_mut_slice()),
            (PARAM_BLOCK_NAMES[1], self.w_item.as_mut_slice()),
            (PARAM_BLOCK_NAMES[2], self.w_feat.as_mut_slice()),
            (PARAM_BLOCK_NAMES[3], self.v_user.as_mut_slice()),
            (PARAM_BLOCK_NAMES[4], self.v_item.as_mut_slice()),
            (PARAM_BLOCK_NAMES[5], self.v_feat.as_mut_slice()),
            (PARAM_BLOCK_NAMES[6], self.w_infl_neighbor.as_mut_slice()),
            (PARAM_BLOCK_NAMES[7], self.w_infl_user.as_mut_slice()),
            (PARAM_BLOCK_NAMES[8], &mut self.decay_raw),
            (PARAM_BLOCK_NAMES[9], &mut self.fusion_raw),
            (PARAM_BLOCK_NAMES[10], self.w_pred.as_mut_slice()),
            (PARAM_BLOCK_NAMES[11], &mut self.b_pred),
            (PARAM_BLOCK_NAMES[12], &mut self.w_ctx),
        ]
    }

    pub fn fill(&mut self, v: f64) {
        for (_, b) in self.blocks_mut() {
            b.iter_mut().for_each(|x| *x = v);
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }
}

/// Deterministically initialises dynamic state and parameters from `seed`.
///
/// Weight matrices are Glorot-uniform, biases zero, per-user rates start at
/// exactly 1 and the context vector is N(0, 0.01²).
pub fn init_states(
    dims: &Dims,
    seed: u64,
    dyn_init: DynamicInit,
) -> Result<(DynamicState, Params)> {
    let dims = Dims::new(dims.users, dims.items, dims.dim, dims.features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Dims {
        users: m,
        items: n,
        dim: d,
        features: f,
    } = dims;
    let unit = unit_softplus_raw();
    let ctx = Normal::new(0.0, 0.01).expect("valid normal");
    let params = Params {
        w_user: Matrix::glorot(d, d, &mut rng),
        w_item: Matrix::glorot(d, d, &mut rng),
        w_feat: Matrix::glorot(d, f, &mut rng),
        v_user: Matrix::glorot(d, d, &mut rng),
        v_item: Matrix::glorot(d, d, &mut rng),
        v_feat: Matrix::glorot(d, f, &mut rng),
        w_infl_neighbor: Matrix::glorot(d, d, &mut rng),
        w_infl_user: Matrix::glorot(d, d, &mut rng),
        decay_raw: vec![unit; m],
        fusion_raw: vec![unit; m],
        w_pred: Matrix::glorot(n + d, dims.pred_input_len(), &mut rng),
        b_pred: vec![0.0; n + d],
        w_ctx: (0..d).map(|_| ctx.sample(&mut rng)).collect(),
    };
    let state = initial_dynamic_state(&dims, seed, dyn_init);
    Ok((state, params))
}

/// Fresh dynamic state; a function of `seed` alone so every epoch restarts
/// from the same embeddings.
pub fn initial_dynamic_state(dims: &Dims, seed: u64, dyn_init: DynamicInit) -> DynamicState {
    let Dims {
        users: m,
        items: n,
        dim: d,
        ..
    } = *dims;
    let mut user_dyn = Matrix::zeros(m, d);
    let mut item_dyn = Matrix::zeros(n, d);
    if let DynamicInit::Random { scale } = dyn_init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let normal = Normal::new(0.0, scale / (d as f64).sqrt()).expect("valid normal");
        for x in user_dyn.as_mut_slice() {
            *x = normal.sample(&mut rng);
        }
        for x in item_dyn.as_mut_slice() {
            *x = normal.sample(&mut rng);
        }
    }
    DynamicState {
        user_dyn,
        item_dyn,
        user_last_t: vec![None; m],
        item_last_t: vec![None; n],
        user_last_item: vec![None; m],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims::new(3, 3, 4, 2).unwrap()
    }

    #[test]
    fn same_seed_identical() {
        let a = init_states(&dims(), 11, DynamicInit::default()).unwrap();
        let b = init_states(&dims(), 11, DynamicInit::default()).unwrap();
        assert_eq!(a, b);
        let c = init_states(&dims(), 12, DynamicInit::default()).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn zero_init_rows() {
        let (state, _) = init_states(&dims(), 3, DynamicInit::Zero).unwrap();
        assert!(state.user_dyn.as_slice().iter().all(|&x| x == 0.0));
        assert!(state.item_dyn.as_slice().iter().all(|&x| x == 0.0));
        assert!(state.user_last_t.iter().all(Option::is_none));
    }

    #[test]
    fn rates_start_at_one() {
        for seed in 0..20 {
            let (_, p) = init_states(&dims(), seed, DynamicInit::default()).unwrap();
            for u in 0..3 {
                assert_eq!(p.decay(u), 1.0);
                assert_eq!(p.fusion_rate(u), 1.0);
            }
        }
    }

    #[test]
    fn glorot_bounds() {
        let (_, p) = init_states(&dims(), 5, DynamicInit::default()).unwrap();
        let lim = (6.0f64 / 8.0).sqrt();
        assert!(p.w_user.as_slice().iter().all(|x| x.abs() <= lim));
        assert_eq!(p.w_pred.rows(), 3 + 4);
        assert_eq!(p.w_pred.cols(), 4 + 3 + 4 + 3);
        assert_eq!(p.dims(), dims());
    }

    #[test]
    fn bad_dims() {
        assert!(Dims::new(0, 3, 4, 0).is_err());
        assert!(Dims::new(3, 3, 0, 0).is_err());
    }

    #[test]
    fn one_hots() {
        let d = dims();
        assert_eq!(
            static_embedding(EntityKind::User, 0, &d)
                .unwrap()
                .to_dense(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(
            static_embedding(EntityKind::Item, 2, &d)
                .unwrap()
                .to_dense(),
            vec![0.0, 0.0, 1.0]
        );
        let a = static_embedding(EntityKind::Item, 0, &d)
            .unwrap()
            .to_dense();
        let b = static_embedding(EntityKind::Item, 1, &d)
            .unwrap()
            .to_dense();
        assert_eq!(crate::linalg::dot(&a, &b), 0.0);
        assert!(static_embedding(EntityKind::User, 3, &d).is_err());
    }
}
