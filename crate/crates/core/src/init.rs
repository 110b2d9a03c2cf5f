//! Initial low-dimensional layouts.
//!
//! [`init_pca`] and [`init_jl`] work on coordinates, [`init_spectral`] and
//! [`init_diffusion`] on the kNN graph. Graph methods embed each connected
//! component separately when the graph is disconnected and spread the
//! components out along the first axis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::eigen::{self, SparseSym};
use crate::error::{Error, Result};
use crate::knn::{symmetrized_edges, Edge, NeighborGraph};
use crate::math;
use crate::model::{Embedding, Points};
use crate::rng::{stage_rng, STREAM_INIT};

pub const DEFAULT_EIG_TOL: f64 = 1e-6;
pub const DEFAULT_EIG_MAX_ITER: usize = 500;

/// Result of a graph-based initializer.
#[derive(Debug, Clone)]
pub struct GraphInit {
    pub embedding: Embedding,
    /// Eigenvalues behind each output axis, per component, in component order.
    pub eigenvalues: Vec<f64>,
    /// ‖Av − λv‖ for every returned eigenvector.
    pub residuals: Vec<f64>,
    pub components: usize,
}

/// Flip `v` so its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Project onto the top-`d` principal directions of the centred data.
pub fn init_pca<P: Points + ?Sized>(points: &P, d: usize) -> Result<Embedding> {
    let (n, dim) = (points.n(), points.dim());
    if d == 0 || d > n.min(dim) {
        return Err(Error::InvalidParameter(format!(
            "PCA target dimension {d} must be in 1..={}",
            n.min(dim)
        )));
    }
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(points.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centred = vec![0.0; dim];
    for i in 0..n {
        for (c, (v, m)) in centred.iter_mut().zip(points.row(i).iter().zip(&mean)) {
            *c = v - m;
        }
        for a in 0..dim {
            for b in a..dim {
                cov[(a, b)] += centred[a] * centred[b];
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let axes: Vec<Vec<f64>> = order[..d]
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    let mut coords = Vec::with_capacity(n * d);
    for i in 0..n {
        let row = points.row(i);
        for axis in &axes {
            coords.push(row.iter().zip(&mean).zip(axis).map(|((v, m), a)| (v - m) * a).sum());
        }
    }
    Ok(Embedding::from_raw(coords, n, d))
}

/// Gaussian random projection `X · G / √d`.
pub fn init_jl<P: Points + ?Sized>(points: &P, d: usize, seed: u64) -> Result<Embedding> {
    if d == 0 {
        return Err(Error::InvalidParameter("JL target dimension must be ≥ 1".into()));
    }
    let (n, dim) = (points.n(), points.dim());
    let mut rng = stage_rng(seed, STREAM_INIT);
    let scale = 1.0 / math::sqrt(d as f64);
    let g: Vec<f64> = (0..dim * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();
    let mut coords = vec![0.0; n * d];
    for i in 0..n {
        let out = &mut coords[i * d..(i + 1) * d];
        for (r, v) in points.row(i).iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += v * g[r * d + c];
            }
        }
    }
    Ok(Embedding::from_raw(coords, n, d))
}

/// Which symmetric operator a graph initializer diagonalizes.
#[derive(Debug, Clone, Copy)]
enum GraphOperator {
    /// D^{-1/2} A D^{-1/2} with unit edge weights.
    NormalizedAdjacency,
    /// Symmetric conjugate of the Markov matrix of a Gaussian kernel; the
    /// output axes are λ^t ψ with ψ = D^{-1/2} φ.
    Diffusion { bandwidth: f64, time: f64 },
}

/// Laplacian eigenmaps on the normalized adjacency of the symmetrized kNN
/// graph. Coordinates are eigenvectors 2..=d+1, scaled to max-abs 1.
pub fn init_spectral(graph: &NeighborGraph, d: usize, tol: f64, max_iter: usize) -> Result<GraphInit> {
    graph_init(graph, d, tol, max_iter, GraphOperator::NormalizedAdjacency)
}

/// Diffusion-map coordinates with Gaussian bandwidth equal to the median kNN
/// distance.
pub fn init_diffusion(graph: &NeighborGraph, d: usize, time: f64, tol: f64, max_iter: usize) -> Result<GraphInit> {
    if !(time >= 0.0) {
        return Err(Error::InvalidParameter(format!("diffusion time must be ≥ 0, got {time}")));
    }
    let mut all: Vec<f64> = (0..graph.n()).flat_map(|i| graph.distances(i).iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mid = all.len() / 2;
    let median = if all.len() % 2 == 0 { 0.5 * (all[mid - 1] + all[mid]) } else { all[mid] };
    let bandwidth = if median > 0.0 { median } else { 1.0 };
    graph_init(graph, d, tol, max_iter, GraphOperator::Diffusion { bandwidth, time })
}

struct Components {
    label: Vec<usize>,
    count: usize,
}

fn components(n: usize, edges: &[Edge]) -> Components {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut root_label = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if root_label[r] == usize::MAX {
            root_label[r] = count;
            count += 1;
        }
        label[v] = root_label[r];
    }
    Components { label, count }
}

fn graph_init(graph: &NeighborGraph, d: usize, tol: f64, max_iter: usize, op: GraphOperator) -> Result<GraphInit> {
    if d == 0 {
        return Err(Error::InvalidParameter("target dimension must be ≥ 1".into()));
    }
    let n = graph.n();
    let edges = symmetrized_edges(graph);
    let comps = components(n, &edges);
    if comps.count > 1 {
        log::warn!(
            "kNN graph has {} connected components; embedding each separately",
            comps.count
        );
    }

    // Local vertex numbering per component.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.count];
    let mut local = vec![0usize; n];
    for v in 0..n {
        let c = comps.label[v];
        local[v] = members[c].len();
        members[c].push(v);
    }
    let mut comp_edges: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); comps.count];
    for e in &edges {
        let c = comps.label[e.i];
        let w = match op {
            GraphOperator::NormalizedAdjacency => 1.0,
            GraphOperator::Diffusion { bandwidth, .. } => {
                let r = e.dist / bandwidth;
                math::exp(-r * r)
            }
        };
        comp_edges[c].push((local[e.i], local[e.j], w));
    }

    let mut coords = vec![0.0; n * d];
    let mut eigenvalues = Vec::new();
    let mut residuals = Vec::new();
    let mut extents = Vec::with_capacity(comps.count);
    for (c, verts) in members.iter().enumerate() {
        let m = verts.len();
        let wanted = d.min(m.saturating_sub(1));
        let mut axes: Vec<Vec<f64>> = Vec::new();
        if wanted > 0 {
            let mut mat = SparseSym::from_pairs(m, &comp_edges[c]);
            let deg = mat.row_sums();
            let inv_sqrt: Vec<f64> = deg.iter().map(|&x| if x > 0.0 { 1.0 / math::sqrt(x) } else { 0.0 }).collect();
            mat.scale_sym(&inv_sqrt);
            let total: f64 = deg.iter().sum();
            let trivial: Vec<f64> = deg.iter().map(|&x| math::sqrt(x / total)).collect();
            let pairs = eigen::top_eigenpairs(&mat, wanted, &trivial, tol, max_iter, crate::rng::derive_seed(c as u64, STREAM_INIT))?;
            for (lambda, mut v) in pairs.values.iter().copied().zip(pairs.vectors) {
                if let GraphOperator::Diffusion { time, .. } = op {
                    let scale = lambda.signum() * math::powf(lambda.abs(), time);
                    for (x, s) in v.iter_mut().zip(&inv_sqrt) {
                        *x *= s * scale;
                    }
                }
                fix_sign(&mut v);
                axes.push(v);
            }
            eigenvalues.extend(pairs.values);
            residuals.extend(pairs.residuals);
        }
        // Per-component max-abs scaling keeps components comparable.
        let peak = axes.iter().flat_map(|a| a.iter()).fold(0.0f64, |p, v| p.max(v.abs()));
        let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (li, &v) in verts.iter().enumerate() {
            for (a, axis) in axes.iter().enumerate() {
                let x = axis[li] * scale;
                coords[v * d + a] = x;
                if a == 0 {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
            }
        }
        extents.push(if axes.is_empty() { 0.0 } else { hi - lo });
    }

    if comps.count > 1 {
        let diameter = extents.iter().cloned().fold(0.0f64, f64::max).max(1.0);
        for v in 0..n {
            coords[v * d] += 3.0 * diameter * comps.label[v] as f64;
        }
    }
    let mut embedding = Embedding::from_raw(coords, n, d);
    embedding.rescale_max_abs();
    Ok(GraphInit {
        embedding,
        eigenvalues,
        residuals,
        components: comps.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::build_knn;
    use crate::model::PointCloud;
    use core::f64::consts::TAU;
    use rand::{Rng, SeedableRng};

    fn cycle_graph(n: usize) -> NeighborGraph {
        let edges: Vec<Edge> = (0..n)
            .map(|i| Edge {
                i: i.min((i + 1) % n),
                j: i.max((i + 1) % n),
                dist: 1.0,
            })
            .collect();
        NeighborGraph::from_edges(n, &edges).unwrap()
    }

    fn random_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new((0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(), n, d).unwrap()
    }

    /// Cyclic Jacobi eigenvalue oracle, independent of nalgebra.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn dist(e: &Embedding, i: usize, j: usize) -> f64 {
        math::euclidean(e.row(i), e.row(j))
    }

    #[test]
    fn pca_on_2d_data_is_isometry() {
        let c = random_cloud(60, 2, 1);
        let e = init_pca(&c, 2).unwrap();
        for i in 0..60 {
            for j in 0..60 {
                let orig = math::euclidean(c.row(i), c.row(j));
                assert!((dist(&e, i, j) - orig).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pca_planar_data_reconstructs_exactly() {
        // Points in the plane spanned by (1, 1, 0) and (0, 1, 1), offset.
        let base = random_cloud(50, 2, 2);
        let data: Vec<f64> = (0..50)
            .flat_map(|i| {
                let (s, t) = (base.row(i)[0], base.row(i)[1]);
                [s + 3.0, s + t - 1.0, t + 0.5]
            })
            .collect();
        let c = PointCloud::new(data, 50, 3).unwrap();
        let e = init_pca(&c, 2).unwrap();
        // Pairwise distances are preserved iff the reconstruction residual is 0.
        for i in 0..50 {
            for j in 0..50 {
                assert!((dist(&e, i, j) - math::euclidean(c.row(i), c.row(j))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pca_captured_variance_matches_oracle() {
        let c = random_cloud(100, 10, 3);
        let e = init_pca(&c, 2).unwrap();
        let n = 100.0;
        let mut mean = vec![0.0; 10];
        for i in 0..100 {
            for j in 0..10 {
                mean[j] += c.row(i)[j] / n;
            }
        }
        let mut cov = vec![vec![0.0; 10]; 10];
        for i in 0..100 {
            for a in 0..10 {
                for b in 0..10 {
                    cov[a][b] += (c.row(i)[a] - mean[a]) * (c.row(i)[b] - mean[b]) / n;
                }
            }
        }
        let ev = jacobi_eigenvalues(cov);
        let captured: f64 = (0..100).map(|i| e.row(i).iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n;
        assert!((captured - (ev[0] + ev[1])).abs() < 1e-9, "{captured} vs {}", ev[0] + ev[1]);
    }

    #[test]
    fn pca_dimension_checked() {
        let c = random_cloud(5, 2, 0);
        assert!(matches!(init_pca(&c, 3), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn pca_translation_invariant_distances() {
        let c = random_cloud(40, 4, 9);
        let shifted = PointCloud::new(c.data().iter().map(|v| v + 17.0).collect(), 40, 4).unwrap();
        let (a, b) = (init_pca(&c, 2).unwrap(), init_pca(&shifted, 2).unwrap());
        for i in 0..40 {
            for j in 0..40 {
                assert!((dist(&a, i, j) - dist(&b, i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jl_deterministic_and_linear() {
        let c = random_cloud(20, 30, 4);
        assert_eq!(init_jl(&c, 2, 5).unwrap(), init_jl(&c, 2, 5).unwrap());
        let zero = PointCloud::new(vec![0.0; 30], 1, 30).unwrap();
        assert!(init_jl(&zero, 2, 5).unwrap().coords().iter().all(|&v| v == 0.0));
        assert!(init_jl(&c, 0, 5).is_err());
    }

    #[test]
    fn jl_isometry_in_expectation() {
        let u = PointCloud::new((0..20).map(|i| (i as f64 * 0.37).sin()).collect(), 2, 10).unwrap();
        let orig = math::euclidean(u.row(0), u.row(1));
        let seeds = 10_000u64;
        let mean: f64 = (0..seeds)
            .map(|s| {
                let e = init_jl(&u, 2, s).unwrap();
                let d = dist(&e, 0, 1);
                d * d / (orig * orig)
            })
            .sum::<f64>()
            / seeds as f64;
        assert!((0.95..=1.05).contains(&mean), "{mean}");
    }

    #[test]
    fn spectral_cycle_is_a_circle() {
        let n = 64;
        let out = init_spectral(&cycle_graph(n), 2, 1e-6, 500).unwrap();
        let radii: Vec<f64> = (0..n).map(|i| libm::hypot(out.embedding.row(i)[0], out.embedding.row(i)[1])).collect();
        let r0 = radii[0];
        assert!(radii.iter().all(|r| (r - r0).abs() < 1e-3), "{radii:?}");
        // Closed form: the two nontrivial eigenvalues are cos(2π/n).
        for l in &out.eigenvalues {
            assert!((l - libm::cos(TAU / n as f64)).abs() < 1e-9);
        }
        assert!(out.residuals.iter().all(|&r| r <= 1e-6));
    }

    #[test]
    fn spectral_two_cliques_fall_back() {
        let mut edges = Vec::new();
        for base in [0usize, 6] {
            for i in 0..6 {
                for j in (i + 1)..6 {
                    edges.push(Edge { i: base + i, j: base + j, dist: 1.0 });
                }
            }
        }
        let g = NeighborGraph::from_edges(12, &edges).unwrap();
        let out = init_spectral(&g, 2, 1e-6, 500).unwrap();
        assert_eq!(out.components, 2);
        let e = &out.embedding;
        let max_a = (0..6).map(|i| e.row(i)[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_b = (6..12).map(|i| e.row(i)[0]).fold(f64::INFINITY, f64::min);
        assert!(min_b > max_a, "components overlap: {max_a} vs {min_b}");
        assert!(e.coords().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn spectral_residual_contract_on_knn_graph() {
        let c = random_cloud(200, 3, 7);
        let g = build_knn(&c, 10).unwrap();
        let out = init_spectral(&g, 2, 1e-6, 500).unwrap();
        assert!(out.residuals.iter().all(|&r| r <= 1e-6));
        assert!(out.embedding.coords().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn spectral_and_diffusion_ignore_edge_order() {
        let n = 30;
        let mut edges: Vec<Edge> = (0..n)
            .map(|i| Edge { i: i.min((i + 1) % n), j: i.max((i + 1) % n), dist: 1.0 + (i % 3) as f64 * 0.1 })
            .collect();
        edges.push(Edge { i: 0, j: 15, dist: 2.0 });
        let a = NeighborGraph::from_edges(n, &edges).unwrap();
        edges.reverse();
        let b = NeighborGraph::from_edges(n, &edges).unwrap();
        let (sa, sb) = (init_spectral(&a, 2, 1e-8, 500).unwrap(), init_spectral(&b, 2, 1e-8, 500).unwrap());
        for (x, y) in sa.embedding.coords().iter().zip(sb.embedding.coords()) {
            assert!((x - y).abs() < 1e-6);
        }
        let (da, db) = (init_diffusion(&a, 2, 1.0, 1e-8, 500).unwrap(), init_diffusion(&b, 2, 1.0, 1e-8, 500).unwrap());
        for (x, y) in da.embedding.coords().iter().zip(db.embedding.coords()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn diffusion_cycle_and_bounds() {
        let n = 48;
        let g = cycle_graph(n);
        let out = init_diffusion(&g, 2, 1.0, 1e-8, 500).unwrap();
        assert!(out.eigenvalues.iter().all(|l| (-1.0..=1.0).contains(l)));
        let radii: Vec<f64> = (0..n).map(|i| libm::hypot(out.embedding.row(i)[0], out.embedding.row(i)[1])).collect();
        assert!(radii.iter().all(|r| (r - radii[0]).abs() < 1e-3));
    }

    #[test]
    fn diffusion_time_zero_is_unscaled_eigenvectors() {
        let c = random_cloud(80, 2, 11);
        let g = build_knn(&c, 8).unwrap();
        let t0 = init_diffusion(&g, 2, 0.0, 1e-9, 500).unwrap();
        let t1 = init_diffusion(&g, 2, 1.0, 1e-9, 500).unwrap();
        // Max-abs rescaling is per-embedding, so compare axis ratios:
        // axis 2 / axis 1 at t = 1 equals (λ2/λ1) times the t = 0 ratio.
        let ratio = t1.eigenvalues[1] / t1.eigenvalues[0];
        let peak = |e: &Embedding, a: usize| (0..80).map(|i| e.row(i)[a].abs()).fold(0.0, f64::max);
        let r0 = peak(&t0.embedding, 1) / peak(&t0.embedding, 0);
        let r1 = peak(&t1.embedding, 1) / peak(&t1.embedding, 0);
        assert!((r1 - ratio * r0).abs() < 1e-6, "{r1} vs {}", ratio * r0);
        assert!(init_diffusion(&g, 2, -1.0, 1e-9, 500).is_err());
    }
}
