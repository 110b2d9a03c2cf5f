//! Local-neighborhood quality of an embedding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::knn::build_knn;
use crate::math;
use crate::model::Points;
use crate::rng::{stage_rng, STREAM_SPLIT};

/// A seeded train/test partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class separately so both sides keep the class balance.
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    /// Returns (train, test) point indices, each sorted ascending.
    pub fn split(&self, labels: &[i64]) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        let mut rng = stage_rng(self.seed, STREAM_SPLIT);
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        if self.stratified {
            for (i, &l) in labels.iter().enumerate() {
                groups.entry(l).or_default().push(i);
            }
        } else {
            groups.insert(0, (0..labels.len()).collect());
        }
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for idx in groups.values_mut() {
            idx.shuffle(&mut rng);
            let cut = (math::round(idx.len() as f64 * self.train_fraction) as usize).clamp(1, idx.len());
            train.extend_from_slice(&idx[..cut]);
            test.extend_from_slice(&idx[cut..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((train, test))
    }
}

/// Majority-vote k-NN classification accuracy on the held-out part of a
/// train/test split. Distance ties go to the smaller index, vote ties to
/// the smaller class id.
pub fn knn_accuracy<P: Points + ?Sized>(embedding: &P, labels: &[i64], k: usize, split: &SplitSpec) -> Result<f64> {
    if labels.len() != embedding.n() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} points",
            labels.len(),
            embedding.n()
        )));
    }
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput("kNN accuracy needs at least two classes".into()));
    }
    let (train, test) = split.split(labels)?;
    if k == 0 || k > train.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={} (training set size)",
            train.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test split".into()));
    }
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    let mut votes: BTreeMap<i64, usize> = BTreeMap::new();
    let mut correct = 0usize;
    for &t in &test {
        let row = embedding.row(t);
        cand.clear();
        cand.extend(train.iter().map(|&j| (math::euclidean(row, embedding.row(j)), j)));
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by);
        }
        votes.clear();
        for &(_, j) in &cand[..k] {
            *votes.entry(labels[j]).or_default() += 1;
        }
        // BTreeMap iterates ascending, so `>` keeps the smallest tied class.
        let mut best = (i64::MIN, 0usize);
        for (&class, &count) in &votes {
            if count > best.1 {
                best = (class, count);
            }
        }
        if best.0 == labels[t] {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Rank of every point in `i`'s original-space neighbor order (1-based,
/// distance ties by index); `ranks[i] = 0`.
fn original_ranks<P: Points + ?Sized>(orig: &P, i: usize, order: &mut Vec<(f64, usize)>, ranks: &mut [usize]) {
    let n = orig.n();
    order.clear();
    order.extend((0..n).filter(|&j| j != i).map(|j| (math::euclidean(orig.row(i), orig.row(j)), j)));
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranks[i] = 0;
    for (r, &(_, j)) in order.iter().enumerate() {
        ranks[j] = r + 1;
    }
}

/// Trustworthiness
/// T(k) = 1 − 2 / (N·k·(2N − 3k − 1)) · Σᵢ Σ_{j ∈ Uₖ(i)} (r(i, j) − k).
pub fn trustworthiness<P: Points + ?Sized, Q: Points + Sync + ?Sized>(orig: &P, embedding: &Q, k: usize) -> Result<f64> {
    let n = orig.n();
    if embedding.n() != n {
        return Err(Error::InvalidInput("embedding and original differ in size".into()));
    }
    if k == 0 || 2 * k >= n {
        return Err(Error::InvalidParameter(format!("trustworthiness needs 1 ≤ k < N/2 (k = {k}, N = {n})")));
    }
    let emb = build_knn(embedding, k)?;
    let mut order = Vec::with_capacity(n);
    let mut ranks = vec![0usize; n];
    let mut penalty: u128 = 0;
    for i in 0..n {
        original_ranks(orig, i, &mut order, &mut ranks);
        for &j in emb.neighbors(i) {
            if ranks[j] > k {
                penalty += (ranks[j] - k) as u128;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 * penalty as f64 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)))
}

/// Mean fraction of each point's original k-NN set that survives in the
/// embedding's k-NN set.
pub fn knn_preservation<P: Points + Sync + ?Sized, Q: Points + Sync + ?Sized>(orig: &P, embedding: &Q, k: usize) -> Result<f64> {
    let n = orig.n();
    if embedding.n() != n {
        return Err(Error::InvalidInput("embedding and original differ in size".into()));
    }
    let a = build_knn(orig, k)?;
    let b = build_knn(embedding, k)?;
    let mut hits = 0usize;
    let mut mark = vec![false; n];
    for i in 0..n {
        for &j in a.neighbors(i) {
            mark[j] = true;
        }
        hits += b.neighbors(i).iter().filter(|&&j| mark[j]).count();
        for &j in a.neighbors(i) {
            mark[j] = false;
        }
    }
    Ok(hits as f64 / (n * k) as f64)
}
