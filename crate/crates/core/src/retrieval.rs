//! Nearest-item search: exact scans and random-hyperplane LSH.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, IacnError, Result};
use crate::event::ItemId;
use crate::linalg::{dot, sq_dist, Matrix};

/// Ascending by distance, ties by ascending id.
fn by_distance(a: &(ItemId, f64), b: &(ItemId, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// The `k` closest entries of a distance vector indexed by item id.
pub fn topk_from_distances(distances: &[f64], k: usize) -> Result<Vec<(ItemId, f64)>> {
    if k > distances.len() {
        return Err(IacnError::InvalidArgument(format!(
            "k = {k} exceeds the {} candidate items",
            distances.len()
        )));
    }
    let mut all: Vec<(ItemId, f64)> = distances.iter().copied().enumerate().collect();
    if k < all.len() && k > 0 {
        all.select_nth_unstable_by(k - 1, by_distance);
    }
    all.truncate(k);
    all.sort_by(by_distance);
    Ok(all)
}

/// 1-based position of `target` under the ordering of [`topk_from_distances`].
pub fn rank_from_distances(distances: &[f64], target: ItemId) -> Result<usize> {
    let Some(&dt) = distances.get(target) else {
        return Err(IacnError::InvalidArgument(format!(
            "item {target} out of range 0..{}",
            distances.len()
        )));
    };
    let ahead = distances
        .iter()
        .enumerate()
        .filter(|&(j, &d)| by_distance(&(j, d), &(target, dt)).is_lt())
        .count();
    Ok(ahead + 1)
}

/// Squared Euclidean distances from `query` to every row of `items`.
pub fn sq_distances(items: &Matrix, query: &[f64]) -> Result<Vec<f64>> {
    check_len("retrieval query", items.cols(), query.len())?;
    Ok((0..items.rows())
        .map(|j| sq_dist(items.row(j), query))
        .collect())
}

/// Squared distances to the representations `[one-hot(j), item_dyn_j]`
/// without materialising the one-hot block.
pub fn onehot_sq_distances(item_dyn: &Matrix, query: &[f64]) -> Result<Vec<f64>> {
    let n = item_dyn.rows();
    check_len("retrieval query", n + item_dyn.cols(), query.len())?;
    let (q_static, q_dyn) = query.split_at(n);
    let base: f64 = q_static.iter().map(|x| x * x).sum();
    Ok((0..n)
        .map(|j| {
            let qj = q_static[j];
            base - qj * qj + (qj - 1.0) * (qj - 1.0) + sq_dist(item_dyn.row(j), q_dyn)
        })
        .collect())
}

/// `k` nearest rows of `items` to `query`, with their squared distances.
pub fn exact_topk(items: &Matrix, query: &[f64], k: usize) -> Result<Vec<(ItemId, f64)>> {
    topk_from_distances(&sq_distances(items, query)?, k)
}

/// Random-hyperplane locality-sensitive hash index.
///
/// Points are centred on the mean of the indexed set before hashing, so the
/// hyperplanes through the origin split the data rather than all passing to
/// one side of it.
#[derive(Debug, Clone)]
pub struct LshIndex {
    tables: usize,
    bits: usize,
    center: Vec<f64>,
    /// One `bits × dim` matrix of unit normals per table.
    planes: Vec<Matrix>,
    buckets: Vec<BTreeMap<u64, Vec<ItemId>>>,
    signatures: Vec<Vec<u64>>,
    items: Matrix,
}

impl LshIndex {
    pub fn build(items: &Matrix, tables: usize, bits: usize, seed: u64) -> Result<Self> {
        if items.rows() == 0 || items.cols() == 0 {
            return Err(IacnError::Empty("cannot index an empty item set".into()));
        }
        if tables == 0 || bits > 64 {
            return Err(IacnError::InvalidArgument(format!(
                "need at least one table and at most 64 bits, got L={tables}, b={bits}"
            )));
        }
        let dim = items.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planes = (0..tables)
            .map(|_| {
                let mut m = Matrix::zeros(bits, dim);
                for r in 0..bits {
                    let row = m.row_mut(r);
                    loop {
                        for x in row.iter_mut() {
                            *x = StandardNormal.sample(&mut rng);
                        }
                        let norm = dot(row, row).sqrt();
                        if norm > 0.0 {
                            row.iter_mut().for_each(|x| *x /= norm);
                            break;
                        }
                    }
                }
                m
            })
            .collect();
        let mut center = vec![0.0; dim];
        for j in 0..items.rows() {
            for (c, x) in center.iter_mut().zip(items.row(j)) {
                *c += x;
            }
        }
        center.iter_mut().for_each(|c| *c /= items.rows() as f64);
        let mut index = LshIndex {
            tables,
            bits,
            center,
            planes,
            buckets: vec![BTreeMap::new(); tables],
            signatures: vec![Vec::with_capacity(items.rows()); tables],
            items: items.clone(),
        };
        for j in 0..items.rows() {
            for t in 0..tables {
                let s = index.signature(t, items.row(j));
                index.signatures[t].push(s);
                index.buckets[t].entry(s).or_default().push(j);
            }
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.items.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.items.rows() == 0
    }

    pub fn tables(&self) -> usize {
        self.tables
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `bits`-bit signature of `v` in `table`; bit r is set when `v` lies on
    /// the positive side of hyperplane r.
    pub fn signature(&self, table: usize, v: &[f64]) -> u64 {
        let planes = &self.planes[table];
        let mut sig = 0u64;
        for r in 0..self.bits {
            let side: f64 = planes
                .row(r)
                .iter()
                .zip(v.iter().zip(&self.center))
                .map(|(p, (x, c))| p * (x - c))
                .sum();
            if side > 0.0 {
                sig |= 1 << r;
            }
        }
        sig
    }

    pub fn stored_signature(&self, table: usize, item: ItemId) -> u64 {
        self.signatures[table][item]
    }

    pub fn bucket(&self, table: usize, sig: u64) -> &[ItemId] {
        self.buckets[table].get(&sig).map_or(&[], |v| v.as_slice())
    }

    /// Replaces the representation of `item` and rehashes it.
    pub fn update(&mut self, item: ItemId, repr: &[f64]) -> Result<()> {
        check_len("lsh update", self.items.cols(), repr.len())?;
        if item >= self.len() {
            return Err(IacnError::InvalidArgument(format!(
                "item {item} out of range 0..{}",
                self.len()
            )));
        }
        self.items.row_mut(item).copy_from_slice(repr);
        for t in 0..self.tables {
            let old = self.signatures[t][item];
            let new = self.signature(t, repr);
            if old == new {
                continue;
            }
            let bucket = self.buckets[t]
                .get_mut(&old)
                .expect("indexed item has a bucket");
            bucket.retain(|&j| j != item);
            if bucket.is_empty() {
                self.buckets[t].remove(&old);
            }
            let dest = self.buckets[t].entry(new).or_default();
            let pos = dest.partition_point(|&j| j < item);
            dest.insert(pos, item);
            self.signatures[t][item] = new;
        }
        Ok(())
    }

    /// Union of the query's buckets over all tables, ascending by id.
    pub fn candidates(&self, query: &[f64]) -> Result<Vec<ItemId>> {
        check_len("lsh query", self.items.cols(), query.len())?;
        let mut out: Vec<ItemId> = (0..self.tables)
            .flat_map(|t| self.bucket(t, self.signature(t, query)).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Up to `k` candidates ranked by exact squared distance.
    pub fn query(&self, query: &[f64], k: usize) -> Result<Vec<(ItemId, f64)>> {
        let mut ranked: Vec<(ItemId, f64)> = self
            .candidates(query)?
            .into_iter()
            .map(|j| (j, sq_dist(self.items.row(j), query)))
            .collect();
        ranked.sort_by(by_distance);
        ranked.truncate(k);
        Ok(ranked)
    }

    /// 1-based rank of `target` among the retrieved candidates, or the index
    /// size when it is not retrieved.
    pub fn rank_of(&self, query: &[f64], target: ItemId) -> Result<usize> {
        let cands = self.candidates(query)?;
        if cands.binary_search(&target).is_err() {
            return Ok(self.len());
        }
        let dt = sq_dist(self.items.row(target), query);
        let ahead = cands
            .iter()
            .filter(|&&j| {
                by_distance(&(j, sq_dist(self.items.row(j), query)), &(target, dt)).is_lt()
            })
            .count();
        Ok(ahead + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_points(n: usize, dim: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(n, dim, data)
    }

    #[test]
    fn self_query_first() {
        let items = random_points(20, 5, 1);
        let top = exact_topk(&items, items.row(5), 3).unwrap();
        assert_eq!(top[0], (5, 0.0));
    }

    #[test]
    fn ties_broken_by_id() {
        let items = Matrix::from_vec(3, 1, vec![2.0, 1.0, -1.0]);
        let top = exact_topk(&items, &[0.0], 3).unwrap();
        assert_eq!(top.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert_eq!(rank_from_distances(&[1.0, 1.0, 0.5], 1).unwrap(), 3);
        assert_eq!(rank_from_distances(&[1.0, 1.0, 0.5], 0).unwrap(), 2);
    }

    #[test]
    fn k_too_large() {
        let items = random_points(4, 2, 2);
        assert!(exact_topk(&items, &[0.0, 0.0], 5).is_err());
        assert!(exact_topk(&items, &[0.0, 0.0], 0).unwrap().is_empty());
    }

    #[test]
    fn onehot_distances_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, d) = (7, 3);
        let dyn_m = random_points(n, d, 4);
        let mut dense = Matrix::zeros(n, n + d);
        for j in 0..n {
            dense.set(j, j, 1.0);
            dense.row_mut(j)[n..].copy_from_slice(dyn_m.row(j));
        }
        let q: Vec<f64> = (0..n + d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = onehot_sq_distances(&dyn_m, &q).unwrap();
        let b = sq_distances(&dense, &q).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_bits_is_exact() {
        let items = random_points(50, 6, 5);
        let idx = LshIndex::build(&items, 1, 0, 9).unwrap();
        let q = items.row(17).iter().map(|x| x + 0.05).collect::<Vec<_>>();
        assert_eq!(
            idx.query(&q, 10).unwrap(),
            exact_topk(&items, &q, 10).unwrap()
        );
        assert_eq!(idx.candidates(&q).unwrap().len(), 50);
    }

    #[test]
    fn indexed_point_finds_itself() {
        let items = random_points(200, 8, 6);
        let idx = LshIndex::build(&items, 4, 12, 1).unwrap();
        for j in [0, 50, 199] {
            assert_eq!(idx.query(items.row(j), 1).unwrap()[0].0, j);
            assert_eq!(idx.rank_of(items.row(j), j).unwrap(), 1);
        }
    }

    #[test]
    fn each_item_in_one_bucket_per_table() {
        let items = random_points(100, 5, 7);
        let idx = LshIndex::build(&items, 3, 6, 2).unwrap();
        for t in 0..3 {
            let total: usize = idx.buckets[t].values().map(|b| b.len()).sum();
            assert_eq!(total, 100);
            for j in 0..100 {
                assert_eq!(idx.stored_signature(t, j), idx.signature(t, items.row(j)));
            }
        }
    }

    #[test]
    fn update_rehashes() {
        let items = random_points(30, 4, 8);
        let mut idx = LshIndex::build(&items, 2, 5, 3).unwrap();
        let moved = items.row(3).to_vec();
        idx.update(7, &moved).unwrap();
        assert_eq!(idx.rank_of(&moved, 3).unwrap(), 1);
        assert_eq!(idx.rank_of(&moved, 7).unwrap(), 2);
        for t in 0..2 {
            assert!(idx.bucket(t, idx.signature(t, &moved)).contains(&7));
            let total: usize = idx.buckets[t].values().map(|b| b.len()).sum();
            assert_eq!(total, 30);
        }
    }

    #[test]
    fn missing_target_ranks_last() {
        let mut items = Matrix::zeros(4, 2);
        items.row_mut(0).copy_from_slice(&[10.0, 10.0]);
        items.row_mut(1).copy_from_slice(&[-10.0, -10.0]);
        items.row_mut(2).copy_from_slice(&[10.0, 9.0]);
        items.row_mut(3).copy_from_slice(&[-9.0, -10.0]);
        let idx = LshIndex::build(&items, 1, 16, 4).unwrap();
        let cands = idx.candidates(&[10.0, 10.0]).unwrap();
        if !cands.contains(&1) {
            assert_eq!(idx.rank_of(&[10.0, 10.0], 1).unwrap(), 4);
        }
        assert!(LshIndex::build(&Matrix::zeros(0, 3), 1, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn topk_matches_full_sort(seed in 0u64..1000, k in 0usize..30) {
            let items = random_points(30, 4, seed);
            let q = random_points(1, 4, seed + 1).row(0).to_vec();
            let got = exact_topk(&items, &q, k).unwrap();
            let mut all: Vec<(usize, f64)> = (0..30).map(|j| {
                let d: f64 = items.row(j).iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (j, d)
            }).collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            prop_assert_eq!(&got[..], &all[..k]);
            for (pos, (j, _)) in all.iter().enumerate() {
                prop_assert_eq!(rank_from_distances(&sq_distances(&items, &q).unwrap(), *j).unwrap(), pos + 1);
            }
        }

        #[test]
        fn lsh_results_ordered_by_exact_distance(seed in 0u64..200) {
            let items = random_points(60, 5, seed);
            let idx = LshIndex::build(&items, 3, 4, seed).unwrap();
            let q = random_points(1, 5, seed + 7).row(0).to_vec();
            let got = idx.query(&q, 60).unwrap();
            for w in got.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            for (j, d) in &got {
                prop_assert_eq!(*d, sq_dist(items.row(*j), &q));
            }
        }
    }
}
