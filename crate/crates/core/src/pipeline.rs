//! End-to-end embedding: normalize, kNN graph, initialize, refine.
//!
//! The stages are exposed separately so studies can reuse a kNN graph and
//! an initial layout across many layout configurations.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::init::{self, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};
use crate::knn::{build_knn, symmetrized_edges, Edge, NeighborGraph};
use crate::layout::{fit_kernel, run_layout, KernelParams, LayoutConfig, TunedPreset, UpdateMode};
use crate::model::{normalize_input, Embedding, PointCloud};
use crate::search::TrialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitKind {
    Pca,
    Spectral,
    Diffusion,
    Jl,
}

impl InitKind {
    pub const ALL: [InitKind; 4] = [InitKind::Pca, InitKind::Spectral, InitKind::Diffusion, InitKind::Jl];

    pub fn name(&self) -> &'static str {
        match self {
            InitKind::Pca => "pca",
            InitKind::Spectral => "spectral",
            InitKind::Diffusion => "diffusion",
            InitKind::Jl => "jl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// Every knob of one embedding run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    /// Output dimension.
    pub dim: usize,
    pub init: InitKind,
    pub spread: f64,
    pub min_dist: f64,
    /// Layout settings; `layout.n_neighbors` is also the kNN `k`.
    pub layout: LayoutConfig,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub diffusion_time: f64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            init: InitKind::Spectral,
            spread: 1.0,
            min_dist: 0.1,
            layout: LayoutConfig::default(),
            eig_tol: DEFAULT_EIG_TOL,
            eig_max_iter: DEFAULT_EIG_MAX_ITER,
            diffusion_time: 1.0,
        }
    }
}

impl EmbedConfig {
    /// The `topology-tuned` preset.
    pub fn topology_tuned() -> Self {
        let p = TunedPreset::POINT;
        Self {
            init: InitKind::Spectral,
            spread: p.spread,
            min_dist: 0.01,
            layout: LayoutConfig {
                n_neighbors: p.n_neighbors,
                max_iter: p.max_iter,
                cutoff: 4.0,
                neg_ratio: 8,
                ..LayoutConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn from_trial(t: &TrialParams, seed: u64) -> Self {
        Self {
            init: t.init,
            spread: t.spread,
            min_dist: t.min_dist,
            layout: LayoutConfig {
                n_neighbors: t.n_neighbors,
                cutoff: t.cutoff,
                neg_ratio: t.neg_ratio,
                max_iter: t.max_iter,
                seed,
                ..LayoutConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.layout.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: UpdateMode) -> Self {
        self.layout.mode = mode;
        self
    }

    pub fn seed(&self) -> u64 {
        self.layout.seed
    }

    pub fn kernel(&self) -> Result<KernelParams> {
        fit_kernel(self.spread, self.min_dist)
    }
}

/// Normalized input with its neighbor graph.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub points: PointCloud,
    pub graph: NeighborGraph,
    pub edges: Vec<Edge>,
}

pub fn prepare(cloud: &PointCloud, k: usize) -> Result<Prepared> {
    let points = normalize_input(cloud)?;
    let graph = build_knn(&points, k)?;
    let edges = symmetrized_edges(&graph);
    Ok(Prepared { points, graph, edges })
}

/// Starting layout, rescaled so the largest coordinate magnitude is 1.
pub fn initialize(prep: &Prepared, cfg: &EmbedConfig) -> Result<Embedding> {
    if cfg.dim == 0 {
        return Err(Error::InvalidParameter("output dimension must be ≥ 1".into()));
    }
    let mut e = match cfg.init {
        InitKind::Pca => init::init_pca(&prep.points, cfg.dim)?,
        InitKind::Jl => init::init_jl(&prep.points, cfg.dim, cfg.seed())?,
        InitKind::Spectral => init::init_spectral(&prep.graph, cfg.dim, cfg.eig_tol, cfg.eig_max_iter)?.embedding,
        InitKind::Diffusion => {
            init::init_diffusion(&prep.graph, cfg.dim, cfg.diffusion_time, cfg.eig_tol, cfg.eig_max_iter)?.embedding
        }
    };
    e.rescale_max_abs();
    Ok(e)
}

pub fn refine(initial: &Embedding, prep: &Prepared, cfg: &EmbedConfig) -> Result<Embedding> {
    run_layout(initial, &prep.edges, &cfg.kernel()?, &cfg.layout)
}

/// The whole pipeline on a raw cloud.
pub fn embed(cloud: &PointCloud, cfg: &EmbedConfig) -> Result<Embedding> {
    let _ = cfg.kernel()?;
    let prep = prepare(cloud, cfg.layout.n_neighbors)?;
    let initial = initialize(&prep, cfg)?;
    refine(&initial, &prep, cfg)
}
