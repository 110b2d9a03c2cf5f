//! Exact k-nearest-neighbor graphs by brute force.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;
use crate::model::Points;

/// Row `i` holds the `k` nearest neighbors of point `i`, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    n: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

/// An undirected attraction edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
}

impl NeighborGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Construct from explicit rows. Used by tests and by callers that
    /// already hold neighbor lists; rows are validated.
    pub fn from_parts(n: usize, k: usize, indices: Vec<usize>, distances: Vec<f64>) -> Result<Self> {
        if indices.len() != n * k || distances.len() != n * k {
            return Err(Error::InvalidInput(format!("neighbor lists do not fill {n}×{k}")));
        }
        for i in 0..n {
            let row = &indices[i * k..(i + 1) * k];
            if row.iter().any(|&j| j == i || j >= n) {
                return Err(Error::InvalidInput(format!("row {i} has an invalid neighbor")));
            }
        }
        Ok(Self {
            k,
            n,
            indices,
            distances,
        })
    }

    /// Build a graph directly from an undirected edge list, for tests that
    /// need a specific topology (cycles, cliques). Each row is padded with
    /// repeats of its nearest entry so every row has the same length.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        let mut adj: Vec<Vec<(f64, usize)>> = (0..n).map(|_| Vec::new()).collect();
        for e in edges {
            if e.i == e.j || e.i >= n || e.j >= n {
                return Err(Error::InvalidInput(format!("bad edge ({}, {})", e.i, e.j)));
            }
            adj[e.i].push((e.dist, e.j));
            adj[e.j].push((e.dist, e.i));
        }
        let k = adj.iter().map(Vec::len).max().unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidInput("graph has no edges".into()));
        }
        let mut indices = Vec::with_capacity(n * k);
        let mut distances = Vec::with_capacity(n * k);
        for (i, row) in adj.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidInput(format!("vertex {i} has no edges")));
            }
            row.sort_by(cmp_candidate);
            for t in 0..k {
                let (d, j) = row[t.min(row.len() - 1)];
                indices.push(j);
                distances.push(d);
            }
        }
        Ok(Self {
            k,
            n,
            indices,
            distances,
        })
    }
}

fn cmp_candidate(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn query_row<P: Points + ?Sized>(points: &P, i: usize, k: usize, scratch: &mut Vec<(f64, usize)>) {
    let n = points.n();
    let ri = points.row(i);
    scratch.clear();
    scratch.extend((0..n).filter(|&j| j != i).map(|j| (math::euclidean(ri, points.row(j)), j)));
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, cmp_candidate);
        scratch.truncate(k);
    }
    scratch.sort_unstable_by(cmp_candidate);
}

/// Exact Euclidean k-NN of every point; ties go to the smaller index.
pub fn build_knn<P: Points + Sync + ?Sized>(points: &P, k: usize) -> Result<NeighborGraph> {
    let n = points.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 ≤ k < N (k = {k}, N = {n})"
        )));
    }
    let rows = query_all(points, k);
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for row in rows {
        for (d, j) in row {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(NeighborGraph {
        k,
        n,
        indices,
        distances,
    })
}

#[cfg(feature = "parallel")]
fn query_all<P: Points + Sync + ?Sized>(points: &P, k: usize) -> Vec<Vec<(f64, usize)>> {
    use rayon::prelude::*;
    (0..points.n())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            query_row(points, i, k, scratch);
            scratch.clone()
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn query_all<P: Points + Sync + ?Sized>(points: &P, k: usize) -> Vec<Vec<(f64, usize)>> {
    let mut scratch = Vec::new();
    (0..points.n())
        .map(|i| {
            query_row(points, i, k, &mut scratch);
            scratch.clone()
        })
        .collect()
}

/// Undirected union of the directed kNN relations, one edge per pair,
/// sorted by `(i, j)`.
pub fn symmetrized_edges(graph: &NeighborGraph) -> Vec<Edge> {
    let mut edges: Vec<Edge> = Vec::with_capacity(graph.n * graph.k);
    for i in 0..graph.n {
        for (&j, &dist) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            edges.push(Edge { i: a, j: b, dist });
        }
    }
    edges.sort_unstable_by(|x, y| x.i.cmp(&y.i).then(x.j.cmp(&y.j)));
    edges.dedup_by(|x, y| x.i == y.i && x.j == y.j);
    edges
}
