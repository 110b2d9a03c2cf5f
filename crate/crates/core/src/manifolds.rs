//! Noisy samples of manifolds with known first Betti number.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math;
use crate::model::PointCloud;
use crate::rng::{stage_rng, STREAM_STRESS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    /// Lemniscate of Gerono in the plane.
    Figure8,
    /// Ring torus in ℝ³ with radii (2, 1).
    Torus,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Figure8 => "figure8",
            ManifoldKind::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "figure8" | "figure-8" => Some(ManifoldKind::Figure8),
            "torus" => Some(ManifoldKind::Torus),
            _ => None,
        }
    }
}

pub const TORUS_MAJOR: f64 = 2.0;
pub const TORUS_MINOR: f64 = 1.0;

/// One member of a stress-test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressManifold {
    pub kind: ManifoldKind,
    pub n_points: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl StressManifold {
    pub fn new(kind: ManifoldKind, n_points: usize, sigma: f64, seed: u64) -> Self {
        Self {
            kind,
            n_points,
            sigma,
            seed,
        }
    }

    /// Both manifolds have two independent 1-cycles.
    pub fn true_beta1(&self) -> usize {
        2
    }

    pub fn sample(&self) -> Result<PointCloud> {
        match self.kind {
            ManifoldKind::Figure8 => sample_figure8(self.n_points, self.sigma, self.seed),
            ManifoldKind::Torus => {
                sample_torus(self.n_points, TORUS_MAJOR, TORUS_MINOR, self.sigma, self.seed)
            }
        }
    }
}

/// The reference stress set: figure-8 at σ = 0.2 and torus at σ = 0.05,
/// 1000 points each.
pub fn standard_stress_set(seed: u64) -> [StressManifold; 2] {
    [
        StressManifold::new(ManifoldKind::Figure8, 1000, 0.2, seed),
        StressManifold::new(ManifoldKind::Torus, 1000, 0.05, seed),
    ]
}

fn noise(sigma: f64) -> Result<Option<Normal<f64>>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be ≥ 0, got {sigma}")));
    }
    Ok(if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("finite positive sigma"))
    } else {
        None
    })
}

/// `n` points on x = sin t, y = sin t · cos t with t uniform on [0, 2π),
/// plus isotropic Gaussian noise of standard deviation `sigma`.
pub fn sample_figure8(n: usize, sigma: f64, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    let noise = noise(sigma)?;
    let mut rng = stage_rng(seed, STREAM_STRESS);
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let t = rng.random::<f64>() * TAU;
        let (s, c) = (math::sin(t), math::cos(t));
        data.push(s);
        data.push(s * c);
    }
    if let Some(noise) = noise {
        for v in &mut data {
            *v += noise.sample(&mut rng);
        }
    }
    PointCloud::new(data, n, 2)
}

/// `n` points on the torus with tube centre radius `major` and tube radius
/// `minor`, angles uniform on [0, 2π)², plus Gaussian noise.
pub fn sample_torus(n: usize, major: f64, minor: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    if !(minor > 0.0 && major > minor) {
        return Err(Error::InvalidGeometry(format!(
            "torus needs R > r > 0, got R = {major}, r = {minor}"
        )));
    }
    let noise = noise(sigma)?;
    let mut rng = stage_rng(seed, STREAM_STRESS);
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let u = rng.random::<f64>() * TAU;
        let v = rng.random::<f64>() * TAU;
        let ring = major + minor * math::cos(v);
        data.push(ring * math::cos(u));
        data.push(ring * math::sin(u));
        data.push(minor * math::sin(v));
    }
    if let Some(noise) = noise {
        for v in &mut data {
            *v += noise.sample(&mut rng);
        }
    }
    PointCloud::new(data, n, 3)
}
