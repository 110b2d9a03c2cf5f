//! Figure-8 noise sweep: significant H₁ counts of the raw sample and of
//! PCA- and spectral-initialized embeddings, averaged over seeds.

use rayon::prelude::*;
use serde::Serialize;
use topoembed_core::manifolds::sample_figure8;
use topoembed_core::pipeline::embed;
use topoembed_core::topology::{beta1_count, rips_persistence, significant_bars, RipsOptions, SIGNIFICANCE};
use topoembed_core::{EmbedConfig, InitKind, Result};

pub const DEFAULT_SIGMAS: [f64; 5] = [0.01, 0.02, 0.05, 0.10, 0.20];

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub sigmas: Vec<f64>,
    pub seeds: u64,
    pub n_points: usize,
    /// Embedding settings; `init` is overridden per column.
    pub config: EmbedConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            sigmas: DEFAULT_SIGMAS.to_vec(),
            seeds: 10,
            n_points: 1000,
            config: EmbedConfig::topology_tuned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub raw: Vec<usize>,
    pub pca: Vec<usize>,
    pub spectral: Vec<usize>,
}

fn mean(v: &[usize]) -> f64 {
    v.iter().sum::<usize>() as f64 / v.len().max(1) as f64
}

impl SweepRow {
    pub fn raw_mean(&self) -> f64 {
        mean(&self.raw)
    }
    pub fn pca_mean(&self) -> f64 {
        mean(&self.pca)
    }
    pub fn spectral_mean(&self) -> f64 {
        mean(&self.spectral)
    }
}

/// Counts for one (σ, seed) cell: raw, pca, spectral.
pub fn sweep_cell(spec: &SweepSpec, sigma: f64, seed: u64) -> Result<[usize; 3]> {
    let cloud = sample_figure8(spec.n_points, sigma, seed)?;
    let raw = significant_bars(&rips_persistence(&cloud, &RipsOptions::default())?, 1, SIGNIFICANCE);
    let mut out = [raw, 0, 0];
    for (slot, init) in [(1, InitKind::Pca), (2, InitKind::Spectral)] {
        let cfg = EmbedConfig { init, ..spec.config.clone() }.with_seed(seed);
        out[slot] = beta1_count(&embed(&cloud, &cfg)?)?;
    }
    Ok(out)
}

pub fn noise_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(usize, u64)> = (0..spec.sigmas.len()).flat_map(|s| (0..spec.seeds).map(move |k| (s, k))).collect();
    let cells: Vec<[usize; 3]> = jobs
        .par_iter()
        .map(|&(s, seed)| sweep_cell(spec, spec.sigmas[s], seed))
        .collect::<Result<_>>()?;
    Ok(spec
        .sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let mine: Vec<&[usize; 3]> = jobs.iter().zip(&cells).filter(|(j, _)| j.0 == s).map(|(_, c)| c).collect();
            SweepRow {
                sigma,
                raw: mine.iter().map(|c| c[0]).collect(),
                pca: mine.iter().map(|c| c[1]).collect(),
                spectral: mine.iter().map(|c| c[2]).collect(),
            }
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("sigma,raw,embedded_pca,embedded_spectral\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.sigma, r.raw_mean(), r.pca_mean(), r.spectral_mean()));
    }
    out
}

pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let xs: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    crate::svg::lines_svg(
        &xs,
        &[
            ("raw", rows.iter().map(SweepRow::raw_mean).collect()),
            ("embedded (pca)", rows.iter().map(SweepRow::pca_mean).collect()),
            ("embedded (spectral)", rows.iter().map(SweepRow::spectral_mean).collect()),
        ],
        "significant H1 bars vs noise (figure-8)",
    )
}
