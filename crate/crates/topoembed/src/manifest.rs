//! Run manifests: what was run, with which resolved settings and seeds,
//! and how long each stage took.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use topoembed_core::rng::{derive_seed, STREAM_INIT, STREAM_LAYOUT, STREAM_SEARCH, STREAM_SPLIT, STREAM_STRESS};
use topoembed_core::{EmbedConfig, UpdateMode};

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command line; re-running it reproduces the outputs.
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: Value,
    pub version: String,
    pub threads: usize,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: Value, seed: u64, threads: usize) -> Self {
        Self {
            command: command.into(),
            argv: argv.to_vec(),
            config,
            seeds: seeds_json(seed),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            timings: Vec::new(),
        }
    }

    /// Run `f`, recording its wall-clock time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_text(path, &(serde_json::to_string_pretty(self)? + "\n"))
    }
}

/// The base seed and the per-stage seeds derived from it.
pub fn seeds_json(seed: u64) -> Value {
    json!({
        "base": seed,
        "init": derive_seed(seed, STREAM_INIT),
        "layout": derive_seed(seed, STREAM_LAYOUT),
        "split": derive_seed(seed, STREAM_SPLIT),
        "search": derive_seed(seed, STREAM_SEARCH),
        "stress": derive_seed(seed, STREAM_STRESS),
    })
}

pub fn config_json(c: &EmbedConfig) -> Value {
    let l = &c.layout;
    json!({
        "dim": c.dim,
        "init": c.init.name(),
        "n_neighbors": l.n_neighbors,
        "spread": c.spread,
        "min_dist": c.min_dist,
        "cutoff": l.cutoff,
        "neg_ratio": l.neg_ratio,
        "max_iter": l.max_iter,
        "seed": l.seed,
        "lr_initial": l.lr_initial,
        "eps": l.eps,
        "mode": match l.mode { UpdateMode::Sequential => "sequential", UpdateMode::Synchronous => "synchronous" },
        "eig_tol": c.eig_tol,
        "eig_max_iter": c.eig_max_iter,
        "diffusion_time": c.diffusion_time,
    })
}
