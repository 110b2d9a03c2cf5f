//! Vietoris–Rips persistence in dimensions 0 and 1, and the summaries built
//! on top of it: significant-bar counts, Betti curves, topology error,
//! dynamic time warping between curves, and island-ness.
//!
//! H₀ comes from Kruskal's algorithm over distance-sorted edges. H₁ is
//! computed as persistent cohomology over ℤ/2: non-tree edges are reduced in
//! reverse filtration order against their implicit coboundaries (triangles),
//! with the tree edges cleared up front. Simplices are ordered by
//! `(diameter, combinatorial index)`, a refinement of the filtration.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::manifolds::StressManifold;
use crate::model::{pairwise_distances, DistanceMatrix, Embedding, PointCloud, Points};

/// Default significance fraction of the maximum persistence.
pub const SIGNIFICANCE: f64 = 0.3;
pub const DEFAULT_GRID_SIZE: usize = 200;
/// Distance matrices beyond this many points are refused.
pub const DEFAULT_MAX_POINTS: usize = 5000;

/// One persistence interval. `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl Bar {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub bars: Vec<Bar>,
    /// Largest filtration value included.
    pub threshold: f64,
}

impl PersistenceDiagram {
    pub fn bars_in(&self, dim: usize) -> impl Iterator<Item = &Bar> + '_ {
        self.bars.iter().filter(move |b| b.dim == dim)
    }

    pub fn finite_persistences(&self, dim: usize) -> Vec<f64> {
        self.bars_in(dim)
            .filter(|b| b.is_finite())
            .map(Bar::persistence)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipsOptions {
    /// 0 or 1.
    pub maxdim: usize,
    /// `None` means the enclosing radius.
    pub threshold: Option<f64>,
    pub max_points: usize,
}

impl Default for RipsOptions {
    fn default() -> Self {
        Self {
            maxdim: 1,
            threshold: None,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// min over points of the max distance to any other point. Above it the
/// Rips complex is a cone.
pub fn enclosing_radius(dist: &DistanceMatrix) -> f64 {
    (0..dist.n())
        .map(|i| dist.row(i).iter().cloned().fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Rips persistence of a point set with Euclidean distances.
pub fn rips_persistence<P: Points + ?Sized>(points: &P, opts: &RipsOptions) -> Result<PersistenceDiagram> {
    if points.n() > opts.max_points {
        return Err(Error::TooLarge {
            n: points.n(),
            cap: opts.max_points,
        });
    }
    rips_from_distances(&pairwise_distances(points), opts)
}

#[inline]
fn edge_index(i: usize, j: usize) -> u64 {
    // i < j
    (j as u64) * (j as u64 - 1) / 2 + i as u64
}

#[inline]
fn triangle_index(mut v: [usize; 3]) -> u64 {
    v.sort_unstable();
    let (i, j, k) = (v[0] as u64, v[1] as u64, v[2] as u64);
    k * (k - 1) * (k - 2) / 6 + j * (j.saturating_sub(1)) / 2 + i
}

/// Filtration key of a non-negative diameter. IEEE bit patterns of
/// non-negative floats sort like the floats.
#[inline]
fn key_bits(x: f64) -> u64 {
    x.to_bits()
}

#[derive(Clone, Copy)]
struct EdgeRec {
    diam: f64,
    i: u32,
    j: u32,
}

/// Rips persistence from an explicit distance matrix.
pub fn rips_from_distances(dist: &DistanceMatrix, opts: &RipsOptions) -> Result<PersistenceDiagram> {
    let n = dist.n();
    if n > opts.max_points {
        return Err(Error::TooLarge { n, cap: opts.max_points });
    }
    if opts.maxdim > 1 {
        return Err(Error::InvalidParameter(alloc::format!(
            "homology above dimension 1 is not supported (maxdim = {})",
            opts.maxdim
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let threshold = match opts.threshold {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::InvalidParameter(alloc::format!("threshold must be > 0, got {t}"))),
        None => enclosing_radius(dist),
    };

    let mut edges: Vec<EdgeRec> = Vec::new();
    for j in 1..n {
        for i in 0..j {
            let d = dist.get(i, j);
            if d <= threshold {
                edges.push(EdgeRec { diam: d, i: i as u32, j: j as u32 });
            }
        }
    }
    edges.sort_unstable_by(|a, b| {
        a.diam
            .total_cmp(&b.diam)
            .then(edge_index(a.i as usize, a.j as usize).cmp(&edge_index(b.i as usize, b.j as usize)))
    });

    // H0 by Kruskal; merging edges are cleared from the H1 reduction.
    let mut bars = Vec::new();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    let mut non_tree: Vec<EdgeRec> = Vec::new();
    for e in &edges {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a.max(b) as usize] = a.min(b);
            if e.diam > 0.0 {
                bars.push(Bar { dim: 0, birth: 0.0, death: e.diam });
            }
        } else {
            non_tree.push(*e);
        }
    }
    for v in 0..n as u32 {
        if find(&mut parent, v) == v {
            bars.push(Bar { dim: 0, birth: 0.0, death: f64::INFINITY });
        }
    }

    if opts.maxdim >= 1 {
        bars.extend(h1_cohomology(dist, &non_tree, threshold));
    }
    Ok(PersistenceDiagram { bars, threshold })
}

type TriKey = (u64, u64);

/// Appends the coboundary of edge `e` (triangles within the threshold).
#[inline]
fn coboundary(dist: &DistanceMatrix, e: &EdgeRec, threshold: f64, mut emit: impl FnMut(TriKey)) {
    let (i, j) = (e.i as usize, e.j as usize);
    let (ri, rj) = (dist.row(i), dist.row(j));
    for k in 0..dist.n() {
        if k == i || k == j {
            continue;
        }
        let d = e.diam.max(ri[k]).max(rj[k]);
        if d <= threshold {
            emit((key_bits(d), triangle_index([i, j, k])));
        }
    }
}

/// Smallest coface of `e` in (diameter, index) order. For a fixed edge the
/// triangle index grows with the third vertex, so the first vertex that
/// keeps the diameter at the edge length wins outright.
#[inline]
fn smallest_coface(dist: &DistanceMatrix, e: &EdgeRec, threshold: f64) -> Option<TriKey> {
    let (i, j) = (e.i as usize, e.j as usize);
    let (ri, rj) = (dist.row(i), dist.row(j));
    let mut best = f64::INFINITY;
    let mut best_k = usize::MAX;
    for k in 0..dist.n() {
        if k == i || k == j {
            continue;
        }
        let m = ri[k].max(rj[k]);
        if m <= e.diam {
            best = e.diam;
            best_k = k;
            break;
        }
        if m < best {
            best = m;
            best_k = k;
        }
    }
    (best <= threshold).then(|| (key_bits(best), triangle_index([i, j, best_k])))
}

fn h1_cohomology(dist: &DistanceMatrix, non_tree: &[EdgeRec], threshold: f64) -> Vec<Bar> {
    let mut bars = Vec::new();
    // Triangle index -> reduction column (list of edges, ℤ/2 sum).
    let mut pivots: HashMap<u64, usize> = HashMap::new();
    let mut reductions: Vec<Vec<u32>> = Vec::new();
    let mut heap: BinaryHeap<Reverse<TriKey>> = BinaryHeap::new();

    for (slot, e) in non_tree.iter().enumerate().rev() {
        // Pivot of the unreduced column: smallest coface.
        let Some(first) = smallest_coface(dist, e, threshold) else {
            bars.push(Bar { dim: 1, birth: e.diam, death: f64::INFINITY });
            continue;
        };
        if !pivots.contains_key(&first.1) {
            // Nothing to reduce against: the column keeps its pivot.
            pivots.insert(first.1, reductions.len());
            reductions.push(vec![slot as u32]);
            push_bar(&mut bars, e.diam, first.0);
            continue;
        }

        heap.clear();
        coboundary(dist, e, threshold, |t| heap.push(Reverse(t)));
        let mut column: Vec<u32> = vec![slot as u32];
        loop {
            match pop_pivot(&mut heap) {
                None => {
                    bars.push(Bar { dim: 1, birth: e.diam, death: f64::INFINITY });
                    break;
                }
                Some(t) => match pivots.get(&t.1) {
                    Some(&r) => {
                        for &other in &reductions[r] {
                            coboundary(dist, &non_tree[other as usize], threshold, |c| heap.push(Reverse(c)));
                            column.push(other);
                        }
                    }
                    None => {
                        pivots.insert(t.1, reductions.len());
                        column.sort_unstable();
                        let mut reduced: Vec<u32> = Vec::with_capacity(column.len());
                        for c in column.chunk_by(|a, b| a == b) {
                            if c.len() % 2 == 1 {
                                reduced.push(c[0]);
                            }
                        }
                        reductions.push(reduced);
                        push_bar(&mut bars, e.diam, t.0);
                        break;
                    }
                },
            }
        }
    }
    bars
}

fn push_bar(bars: &mut Vec<Bar>, birth: f64, death_bits: u64) {
    let death = f64::from_bits(death_bits);
    if death > birth {
        bars.push(Bar { dim: 1, birth, death });
    }
}

/// Smallest entry with odd multiplicity; leaves it on the heap.
fn pop_pivot(heap: &mut BinaryHeap<Reverse<TriKey>>) -> Option<TriKey> {
    loop {
        let Reverse(top) = heap.pop()?;
        if heap.peek() == Some(&Reverse(top)) {
            heap.pop();
        } else {
            heap.push(Reverse(top));
            return Some(top);
        }
    }
}

/// Finite bars in `dim` whose persistence is at least `rel` times the
/// largest finite persistence in that dimension.
pub fn significant_bars(diagram: &PersistenceDiagram, dim: usize, rel: f64) -> usize {
    let pers = diagram.finite_persistences(dim);
    let max = pers.iter().cloned().fold(0.0, f64::max);
    if pers.is_empty() || max <= 0.0 {
        return 0;
    }
    let cut = rel * max;
    pers.iter().filter(|&&p| p >= cut).count()
}

/// Betti counts on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BettiCurve {
    pub dim: usize,
    pub grid: Vec<f64>,
    pub counts: Vec<u32>,
}

/// Sample the Betti curve of `dim` on `grid_size` uniform points over
/// [0, largest finite death in `dim`]. A bar counts at `t` when
/// `birth ≤ t < death`.
pub fn betti_curve(diagram: &PersistenceDiagram, dim: usize, grid_size: usize) -> Result<BettiCurve> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("Betti curve needs at least 2 grid points".into()));
    }
    let max_death = diagram
        .bars_in(dim)
        .filter(|b| b.is_finite())
        .map(|b| b.death)
        .fold(f64::NEG_INFINITY, f64::max);
    let top = if max_death > 0.0 {
        max_death
    } else if diagram.threshold > 0.0 && diagram.threshold.is_finite() {
        diagram.threshold
    } else {
        1.0
    };
    let grid: Vec<f64> = (0..grid_size)
        .map(|g| top * g as f64 / (grid_size - 1) as f64)
        .collect();
    let counts = grid
        .iter()
        .map(|&t| diagram.bars_in(dim).filter(|b| b.birth <= t && t < b.death).count() as u32)
        .collect();
    Ok(BettiCurve { dim, grid, counts })
}

/// Exact dynamic time warping between the count sequences of two curves,
/// with |x − y| as the local cost.
pub fn dtw_distance(a: &BettiCurve, b: &BettiCurve) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::InvalidInput(alloc::format!(
            "cannot compare H{} with H{} curves",
            a.dim, b.dim
        )));
    }
    let x: Vec<f64> = a.counts.iter().map(|&c| c as f64).collect();
    let y: Vec<f64> = b.counts.iter().map(|&c| c as f64).collect();
    dtw(&x, &y)
}

/// DTW over plain sequences.
pub fn dtw(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("DTW needs nonempty sequences".into()));
    }
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &xi in x {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = (xi - y[j - 1]).abs();
            cur[j] = cost + prev[j].min(cur[j - 1]).min(prev[j - 1]);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Island-ness summary of the H₀ part of a diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslandMetrics {
    pub longest_h0_bar: f64,
    /// Mean of the five longest finite H₀ bars over the median one.
    pub top5_over_median: f64,
}

pub fn island_metrics(diagram: &PersistenceDiagram) -> Result<IslandMetrics> {
    let mut pers = diagram.finite_persistences(0);
    if pers.len() < 6 {
        return Err(Error::InsufficientBars { found: pers.len(), needed: 6 });
    }
    pers.sort_by(|a, b| b.total_cmp(a));
    let top5 = pers[..5].iter().sum::<f64>() / 5.0;
    let len = pers.len();
    let median = if len % 2 == 1 {
        pers[len / 2]
    } else {
        0.5 * (pers[len / 2 - 1] + pers[len / 2])
    };
    Ok(IslandMetrics {
        longest_h0_bar: pers[0],
        top5_over_median: top5 / median,
    })
}

/// Per-manifold outcome of a topology-error evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyErrorReport {
    /// Significant H₁ counts, one per stress manifold.
    pub counts: Vec<usize>,
    pub truths: Vec<usize>,
    pub error: usize,
}

/// Topology error from already-measured counts.
pub fn topology_error_from_counts(counts: &[usize], truths: &[usize]) -> usize {
    counts.iter().zip(truths).map(|(&c, &t)| c.abs_diff(t)).sum()
}

/// Significant H₁ bars of a 2-D (or 3-D) layout at the default rule.
pub fn beta1_count(embedding: &Embedding) -> Result<usize> {
    let diagram = rips_persistence(embedding, &RipsOptions::default())?;
    Ok(significant_bars(&diagram, 1, SIGNIFICANCE))
}

/// Sample every stress manifold, embed it with `embed`, and sum the
/// absolute deviations of the significant H₁ counts from the true β₁.
pub fn topology_error<F>(mut embed: F, stress_set: &[StressManifold]) -> Result<TopologyErrorReport>
where
    F: FnMut(&PointCloud) -> Result<Embedding>,
{
    if stress_set.is_empty() {
        return Err(Error::InvalidInput("empty stress set".into()));
    }
    let mut counts = Vec::with_capacity(stress_set.len());
    for m in stress_set {
        let cloud = m.sample()?;
        let embedding = embed(&cloud)?;
        counts.push(beta1_count(&embedding)?);
    }
    let truths: Vec<usize> = stress_set.iter().map(StressManifold::true_beta1).collect();
    let error = topology_error_from_counts(&counts, &truths);
    Ok(TopologyErrorReport { counts, truths, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PointCloud;

    fn cloud(rows: &[[f64; 2]]) -> PointCloud {
        PointCloud::new(rows.iter().flatten().copied().collect(), rows.len(), 2).unwrap()
    }

    fn sorted(mut bars: Vec<Bar>) -> Vec<Bar> {
        bars.sort_by(|a, b| {
            a.dim.cmp(&b.dim).then(a.birth.total_cmp(&b.birth)).then(a.death.total_cmp(&b.death))
        });
        bars
    }

    #[test]
    fn equilateral_triangle() {
        let h = libm::sqrt(3.0) / 2.0;
        let d = rips_persistence(&cloud(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]), &RipsOptions::default()).unwrap();
        let h0: Vec<Bar> = sorted(d.bars_in(0).copied().collect());
        assert_eq!(h0.len(), 3);
        assert!(h0.iter().filter(|b| b.is_finite()).all(|b| (b.death - 1.0).abs() < 1e-12));
        assert_eq!(h0.iter().filter(|b| !b.is_finite()).count(), 1);
        assert_eq!(d.bars_in(1).count(), 0);
    }

    #[test]
    fn unit_square_has_one_loop() {
        let d = rips_persistence(&cloud(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), &RipsOptions::default()).unwrap();
        let h1: Vec<Bar> = d.bars_in(1).copied().collect();
        assert_eq!(h1, vec![Bar { dim: 1, birth: 1.0, death: core::f64::consts::SQRT_2 }]);
        assert_eq!(d.threshold, core::f64::consts::SQRT_2);
    }

    #[test]
    fn single_point() {
        let d = rips_persistence(&cloud(&[[3.0, 4.0]]), &RipsOptions::default()).unwrap();
        assert_eq!(d.bars, vec![Bar { dim: 0, birth: 0.0, death: f64::INFINITY }]);
    }

    #[test]
    fn size_cap_enforced() {
        let c = cloud(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let opts = RipsOptions { max_points: 2, ..Default::default() };
        assert!(matches!(rips_persistence(&c, &opts), Err(Error::TooLarge { n: 3, cap: 2 })));
    }

    #[test]
    fn components_at_low_threshold() {
        let c = cloud(&[[0.0, 0.0], [0.1, 0.0], [5.0, 0.0], [5.1, 0.0]]);
        let d = rips_persistence(&c, &RipsOptions { threshold: Some(1.0), ..Default::default() }).unwrap();
        assert_eq!(d.bars_in(0).filter(|b| !b.is_finite()).count(), 2);
    }

    #[test]
    fn significant_bar_rule() {
        let d = PersistenceDiagram {
            bars: vec![
                Bar { dim: 1, birth: 0.0, death: 1.0 },
                Bar { dim: 1, birth: 0.0, death: 0.35 },
                Bar { dim: 1, birth: 0.0, death: 0.2 },
                Bar { dim: 1, birth: 0.5, death: f64::INFINITY },
            ],
            threshold: 1.0,
        };
        assert_eq!(significant_bars(&d, 1, 0.3), 2);
        let empty = PersistenceDiagram { bars: vec![], threshold: 1.0 };
        assert_eq!(significant_bars(&empty, 1, 0.3), 0);
    }

    #[test]
    fn betti_curve_half_open() {
        let d = PersistenceDiagram { bars: vec![Bar { dim: 0, birth: 0.0, death: 1.0 }], threshold: 1.0 };
        let c = betti_curve(&d, 0, 11).unwrap();
        assert_eq!(c.grid[10], 1.0);
        assert!(c.counts[..10].iter().all(|&v| v == 1));
        assert_eq!(c.counts[10], 0);
        let empty = PersistenceDiagram { bars: vec![], threshold: 1.0 };
        assert!(betti_curve(&empty, 1, 5).unwrap().counts.iter().all(|&v| v == 0));
        assert!(betti_curve(&empty, 1, 1).is_err());
    }

    #[test]
    fn betti_curve_of_triangle() {
        let h = libm::sqrt(3.0) / 2.0;
        let d = rips_persistence(&cloud(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]), &RipsOptions::default()).unwrap();
        let c = betti_curve(&d, 0, 5).unwrap();
        // Deaths sit at ~1.0 = the top of the grid.
        assert_eq!(&c.counts[..4], &[3, 3, 3, 3]);
        assert_eq!(c.counts[4], 1);
    }

    fn curve(counts: &[u32]) -> BettiCurve {
        BettiCurve { dim: 1, grid: (0..counts.len()).map(|i| i as f64).collect(), counts: counts.to_vec() }
    }

    #[test]
    fn dtw_fixtures() {
        assert_eq!(dtw_distance(&curve(&[1, 1, 1]), &curve(&[2, 2, 2])).unwrap(), 3.0);
        let a = curve(&[0, 3, 1, 4, 4]);
        assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
        let mut h0 = curve(&[1]);
        h0.dim = 0;
        assert!(dtw_distance(&a, &h0).is_err());
    }

    #[test]
    fn island_fixtures() {
        let bars = |ps: &[f64]| PersistenceDiagram {
            bars: ps.iter().map(|&p| Bar { dim: 0, birth: 0.0, death: p }).collect(),
            threshold: 10.0,
        };
        let m = island_metrics(&bars(&[1.0; 6])).unwrap();
        assert_eq!((m.longest_h0_bar, m.top5_over_median), (1.0, 1.0));
        let mut ps = vec![10.0; 5];
        ps.extend([1.0; 6]);
        let m = island_metrics(&bars(&ps)).unwrap();
        assert_eq!((m.longest_h0_bar, m.top5_over_median), (10.0, 10.0));
        assert!(matches!(island_metrics(&bars(&[1.0; 5])), Err(Error::InsufficientBars { found: 5, .. })));
    }

    #[test]
    fn topology_error_counts() {
        assert_eq!(topology_error_from_counts(&[2, 2], &[2, 2]), 0);
        assert_eq!(topology_error_from_counts(&[7, 2], &[2, 2]), 5);
        assert_eq!(topology_error_from_counts(&[0, 3], &[2, 2]), 3);
    }

    #[test]
    fn triangle_indices_are_a_bijection() {
        let n = 9;
        let mut seen = vec![false; n * (n - 1) * (n - 2) / 6];
        for k in 0..n {
            for j in 0..k {
                for i in 0..j {
                    let t = triangle_index([k, i, j]) as usize;
                    assert!(!seen[t]);
                    seen[t] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn triangle_index_grows_with_third_vertex() {
        let n = 12;
        for j in 1..n {
            for i in 0..j {
                let idx: Vec<u64> = (0..n).filter(|&k| k != i && k != j).map(|k| triangle_index([i, j, k])).collect();
                assert!(idx.windows(2).all(|w| w[0] < w[1]), "({i},{j})");
            }
        }
    }
}
