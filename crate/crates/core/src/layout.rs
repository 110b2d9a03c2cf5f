//! Force-directed refinement.
//!
//! Points joined by a kNN edge attract under Φ_att(d) = log(1 + a·d^{2b});
//! randomly drawn pairs repel under Φ_rep(d) = −log(a·d^{2b} / (1 + a·d^{2b})).
//! Every individual force magnitude is clamped to `cutoff`, which keeps the
//! kernel bounded and the iteration NaN-free.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::knn::Edge;
use crate::math;
use crate::model::{Embedding, Points};
use crate::rng::{derive_seed, mix64, stage_rng, StageRng, STREAM_LAYOUT};

/// The curve 1 / (1 + a·d^{2b}) fitted to an offset exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub a: f64,
    pub b: f64,
    pub spread: f64,
    pub min_dist: f64,
}

impl KernelParams {
    /// Low-dimensional membership strength at distance `d`.
    pub fn curve(&self, d: f64) -> f64 {
        1.0 / (1.0 + self.a * math::powf(d, 2.0 * self.b))
    }
}

const FIT_GRID: usize = 300;

fn fit_target(x: f64, spread: f64, min_dist: f64) -> f64 {
    if x <= min_dist {
        1.0
    } else {
        math::exp(-(x - min_dist) / spread)
    }
}

fn fit_sse(a: f64, b: f64, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = 1.0 / (1.0 + a * math::powf(x, 2.0 * b)) - y;
            r * r
        })
        .sum()
}

/// Least-squares fit of (a, b) so that 1 / (1 + a·d^{2b}) tracks 1 on
/// [0, min_dist] and exp(−(d − min_dist)/spread) beyond, sampled on 300
/// uniform points over [0, 3·spread]. Levenberg–Marquardt from (1, 1).
pub fn fit_kernel(spread: f64, min_dist: f64) -> Result<KernelParams> {
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::InvalidParameter(format!("spread must be > 0, got {spread}")));
    }
    if !(min_dist > 0.0 && min_dist < 10.0 * spread) {
        return Err(Error::InvalidParameter(format!(
            "min_dist must be in (0, 10·spread), got {min_dist}"
        )));
    }
    let xs: Vec<f64> = (0..FIT_GRID)
        .map(|i| 3.0 * spread * i as f64 / (FIT_GRID - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| fit_target(x, spread, min_dist)).collect();

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut sse = fit_sse(a, b, &xs, &ys);
    let mut damping = 1e-3;
    for _ in 0..1000 {
        // Normal equations J^T J δ = −J^T r for the two parameters.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x == 0.0 {
                continue; // f(0) = 1 regardless of (a, b)
            }
            let p = math::powf(x, 2.0 * b);
            let den = 1.0 + a * p;
            let r = 1.0 / den - y;
            let da = -p / (den * den);
            let db = -a * p * 2.0 * math::ln(x) / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        if libm::hypot(ga, gb) < 1e-15 {
            return Ok(KernelParams { a, b, spread, min_dist });
        }
        let mut accepted = false;
        while damping < 1e12 {
            let (m00, m11) = (jaa * (1.0 + damping), jbb * (1.0 + damping));
            let det = m00 * m11 - jab * jab;
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 && na.is_finite() && nb.is_finite() {
                let nsse = fit_sse(na, nb, &xs, &ys);
                if nsse <= sse {
                    let rel = (sse - nsse) / sse.max(1e-300);
                    let small_step = step_a.abs() <= 1e-12 * a && step_b.abs() <= 1e-12 * b;
                    a = na;
                    b = nb;
                    sse = nsse;
                    damping = (damping * 0.3).max(1e-12);
                    accepted = true;
                    if rel < 1e-15 || small_step {
                        return Ok(KernelParams { a, b, spread, min_dist });
                    }
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: we are at the minimum to
            // machine precision.
            return Ok(KernelParams { a, b, spread, min_dist });
        }
    }
    Err(Error::FitFailed {
        residual: math::sqrt(sse / FIT_GRID as f64),
    })
}

/// Φ_att(d) = log(1 + a·d^{2b}).
pub fn attractive_potential(d: f64, p: &KernelParams) -> f64 {
    math::ln(1.0 + p.a * math::powf(d, 2.0 * p.b))
}

/// Φ_rep(d) = −log(a·d^{2b} / (1 + a·d^{2b})).
pub fn repulsive_potential(d: f64, p: &KernelParams) -> f64 {
    let q = p.a * math::powf(d, 2.0 * p.b);
    -math::ln(q / (1.0 + q))
}

/// dΦ_att/dd = 2ab·d^{2b−1} / (1 + a·d^{2b}), unclamped. Non-negative.
pub fn attractive_force(d: f64, p: &KernelParams) -> f64 {
    let e = 2.0 * p.b - 1.0;
    if d == 0.0 {
        return if e > 0.0 {
            0.0
        } else if e == 0.0 {
            2.0 * p.a * p.b
        } else {
            f64::INFINITY
        };
    }
    2.0 * p.a * p.b * math::powf(d, e) / (1.0 + p.a * math::powf(d, 2.0 * p.b))
}

/// dΦ_rep/dd = −2b / (d·(1 + a·d^{2b})) with `d` floored at `eps`,
/// unclamped. Non-positive.
pub fn repulsive_force(d: f64, p: &KernelParams, eps: f64) -> f64 {
    let d = d.max(eps);
    -2.0 * p.b / (d * (1.0 + p.a * math::powf(d, 2.0 * p.b)))
}

/// How positions are updated within one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    /// In-place updates in a fixed order; the bit-reproducibility reference.
    Sequential,
    /// Forces gathered from the positions at the start of the iteration,
    /// then applied together. Parallel over points under the `parallel`
    /// feature; the result does not depend on the thread count.
    Synchronous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutConfig {
    pub n_neighbors: usize,
    /// Clamp on every force magnitude, in embedding units.
    pub cutoff: f64,
    /// Negative samples per incident attraction edge, per point and iteration.
    pub neg_ratio: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub lr_initial: f64,
    /// Floor on distances entering the repulsion.
    pub eps: f64,
    pub mode: UpdateMode,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 16,
            cutoff: 4.0,
            neg_ratio: 8,
            max_iter: 128,
            seed: 0,
            lr_initial: 1.0,
            eps: 1e-3,
            mode: UpdateMode::Sequential,
        }
    }
}

impl LayoutConfig {
    fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidParameter(format!("cutoff must be > 0, got {}", self.cutoff)));
        }
        if !(self.lr_initial > 0.0) || !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("lr_initial and eps must be > 0".into()));
        }
        Ok(())
    }
}

/// The parameter region that the Pareto studies converged on, and the
/// point value shipped as the `topology-tuned` preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedPreset {
    pub spread: f64,
    pub max_iter: usize,
    pub n_neighbors: usize,
}

impl TunedPreset {
    pub const SPREAD_RANGE: (f64, f64) = (2.0, 3.9);
    pub const MAX_ITER_RANGE: (usize, usize) = (125, 242);
    pub const N_NEIGHBORS_RANGE: (usize, usize) = (10, 30);

    pub const POINT: TunedPreset = TunedPreset {
        spread: 3.0,
        max_iter: 200,
        n_neighbors: 16,
    };

    pub fn contains(spread: f64, max_iter: usize, n_neighbors: usize) -> bool {
        (Self::SPREAD_RANGE.0..=Self::SPREAD_RANGE.1).contains(&spread)
            && (Self::MAX_ITER_RANGE.0..=Self::MAX_ITER_RANGE.1).contains(&max_iter)
            && (Self::N_NEIGHBORS_RANGE.0..=Self::N_NEIGHBORS_RANGE.1).contains(&n_neighbors)
    }
}

struct Kernel {
    a: f64,
    two_b: f64,
    cutoff: f64,
    eps: f64,
}

impl Kernel {
    fn new(p: &KernelParams, cutoff: f64, eps: f64) -> Self {
        Self { a: p.a, two_b: 2.0 * p.b, cutoff, eps }
    }

    /// Same value as [`attractive_force`] for d > 0, one `powf` instead of two.
    #[inline]
    fn attract(&self, d: f64) -> f64 {
        let q = self.a * math::powf(d, self.two_b);
        (self.two_b * q / (d * (1.0 + q))).min(self.cutoff)
    }

    /// Magnitude of the push apart (positive).
    #[inline]
    fn repel(&self, d: f64) -> f64 {
        let d = d.max(self.eps);
        (self.two_b / (d * (1.0 + self.a * math::powf(d, self.two_b)))).min(self.cutoff)
    }
}

/// Uniform index in `0..n` other than `skip`.
#[inline]
fn sample_other<R: Rng>(rng: &mut R, n: usize, skip: usize) -> usize {
    let m = rng.random_range(0..n - 1);
    if m >= skip {
        m + 1
    } else {
        m
    }
}

/// Unit vector from `b` to `a` and the distance; a random axis direction
/// when the points coincide.
#[inline]
fn direction<R: Rng>(a: &[f64], b: &[f64], out: &mut [f64], rng: &mut R) -> f64 {
    let mut acc = 0.0;
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x - y;
        acc += *o * *o;
    }
    let d = math::sqrt(acc);
    if d > 0.0 {
        out.iter_mut().for_each(|o| *o /= d);
    } else {
        out.iter_mut().for_each(|o| *o = 0.0);
        let axis = rng.random_range(0..out.len());
        out[axis] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    d
}

/// Refine `initial` by `cfg.max_iter` rounds of edge attraction and
/// negative-sample repulsion with a linearly decaying learning rate.
pub fn run_layout(initial: &Embedding, edges: &[Edge], params: &KernelParams, cfg: &LayoutConfig) -> Result<Embedding> {
    cfg.validate()?;
    if !initial.is_finite() {
        return Err(Error::InvalidInput("initial embedding is not finite".into()));
    }
    let n = initial.n();
    if let Some(e) = edges.iter().find(|e| e.i >= n || e.j >= n || e.i == e.j) {
        return Err(Error::InvalidInput(format!("edge ({}, {}) out of range", e.i, e.j)));
    }
    let mut out = initial.clone();
    if n < 2 {
        return Ok(out);
    }
    let kernel = Kernel::new(params, cfg.cutoff, cfg.eps);
    let mut degree = vec![0usize; n];
    for e in edges {
        degree[e.i] += 1;
        degree[e.j] += 1;
    }
    match cfg.mode {
        UpdateMode::Sequential => sequential(&mut out, edges, &degree, &kernel, cfg)?,
        UpdateMode::Synchronous => synchronous(&mut out, edges, &degree, &kernel, cfg)?,
    }
    Ok(out)
}

fn learning_rate(cfg: &LayoutConfig, it: usize) -> f64 {
    cfg.lr_initial * (1.0 - it as f64 / cfg.max_iter as f64)
}

fn sequential(out: &mut Embedding, edges: &[Edge], degree: &[usize], kernel: &Kernel, cfg: &LayoutConfig) -> Result<()> {
    let (n, d) = (out.n(), out.dim());
    let mut rng: StageRng = stage_rng(cfg.seed, STREAM_LAYOUT);
    let mut dir = vec![0.0; d];
    let y = out.coords_mut();
    for it in 0..cfg.max_iter {
        let lr = learning_rate(cfg, it);
        for e in edges {
            let (a, b) = (e.i * d, e.j * d);
            let dist = direction(&y[a..a + d], &y[b..b + d], &mut dir, &mut rng);
            if dist == 0.0 {
                continue;
            }
            let step = lr * kernel.attract(dist);
            for c in 0..d {
                y[a + c] -= step * dir[c];
                y[b + c] += step * dir[c];
            }
        }
        for p in 0..n {
            let samples = cfg.neg_ratio * degree[p].max(1);
            for _ in 0..samples {
                let m = sample_other(&mut rng, n, p);
                let (a, b) = (p * d, m * d);
                let dist = direction(&y[a..a + d], &y[b..b + d], &mut dir, &mut rng);
                let step = lr * kernel.repel(dist);
                for c in 0..d {
                    y[a + c] += step * dir[c];
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
    }
    Ok(())
}

struct Adjacency {
    start: Vec<usize>,
    nbrs: Vec<usize>,
}

fn adjacency(n: usize, edges: &[Edge]) -> Adjacency {
    let mut start = vec![0usize; n + 1];
    for e in edges {
        start[e.i + 1] += 1;
        start[e.j + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut nbrs = vec![0usize; start[n]];
    for e in edges {
        nbrs[fill[e.i]] = e.j;
        fill[e.i] += 1;
        nbrs[fill[e.j]] = e.i;
        fill[e.j] += 1;
    }
    Adjacency { start, nbrs }
}

/// Net force on point `p` given frozen `y`, clamped to `cutoff` in norm.
#[allow(clippy::too_many_arguments)]
fn point_force(
    p: usize,
    y: &[f64],
    d: usize,
    adj: &Adjacency,
    kernel: &Kernel,
    neg_ratio: usize,
    iter_seed: u64,
    out: &mut [f64],
) {
    let n = y.len() / d;
    let mut rng: StageRng = rand::SeedableRng::seed_from_u64(mix64(iter_seed ^ p as u64));
    let mut dir = [0.0f64; 3];
    let mut dir_vec;
    let dir: &mut [f64] = if d <= 3 {
        &mut dir[..d]
    } else {
        dir_vec = vec![0.0; d];
        &mut dir_vec
    };
    out.iter_mut().for_each(|o| *o = 0.0);
    let yp = &y[p * d..(p + 1) * d];
    let nb = &adj.nbrs[adj.start[p]..adj.start[p + 1]];
    for &q in nb {
        let dist = direction(yp, &y[q * d..(q + 1) * d], dir, &mut rng);
        if dist == 0.0 {
            continue;
        }
        let f = kernel.attract(dist);
        for c in 0..d {
            out[c] -= f * dir[c];
        }
    }
    for _ in 0..neg_ratio * nb.len().max(1) {
        let m = sample_other(&mut rng, n, p);
        let dist = direction(yp, &y[m * d..(m + 1) * d], dir, &mut rng);
        let f = kernel.repel(dist);
        for c in 0..d {
            out[c] += f * dir[c];
        }
    }
    let norm = math::sqrt(out.iter().map(|v| v * v).sum());
    if norm > kernel.cutoff {
        let s = kernel.cutoff / norm;
        out.iter_mut().for_each(|v| *v *= s);
    }
}

fn synchronous(out: &mut Embedding, edges: &[Edge], _degree: &[usize], kernel: &Kernel, cfg: &LayoutConfig) -> Result<()> {
    let (n, d) = (out.n(), out.dim());
    let adj = adjacency(n, edges);
    let base = derive_seed(cfg.seed, STREAM_LAYOUT);
    let mut forces = vec![0.0; n * d];
    for it in 0..cfg.max_iter {
        let lr = learning_rate(cfg, it);
        let iter_seed = mix64(base ^ mix64(it as u64 + 1));
        let y = out.coords();
        gather(y, d, &adj, kernel, cfg.neg_ratio, iter_seed, &mut forces);
        let y = out.coords_mut();
        for (v, f) in y.iter_mut().zip(&forces) {
            *v += lr * f;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn gather(y: &[f64], d: usize, adj: &Adjacency, kernel: &Kernel, neg_ratio: usize, iter_seed: u64, forces: &mut [f64]) {
    use rayon::prelude::*;
    forces
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(p, f)| point_force(p, y, d, adj, kernel, neg_ratio, iter_seed, f));
}

#[cfg(not(feature = "parallel"))]
fn gather(y: &[f64], d: usize, adj: &Adjacency, kernel: &Kernel, neg_ratio: usize, iter_seed: u64, forces: &mut [f64]) {
    for (p, f) in forces.chunks_mut(d).enumerate() {
        point_force(p, y, d, adj, kernel, neg_ratio, iter_seed, f);
    }
}
