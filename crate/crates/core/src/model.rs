//! Shared domain types: point clouds, embeddings, distance matrices and the
//! input normalization applied before anything else touches the data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Read access to a dense row-major point set.
pub trait Points {
    fn n(&self) -> usize;
    fn dim(&self) -> usize;
    fn data(&self) -> &[f64];

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data()[i * d..(i + 1) * d]
    }
}

/// Dense N×D matrix with optional integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    n: usize,
    dim: usize,
    labels: Option<Vec<i64>>,
}

impl PointCloud {
    /// Wrap row-major `data` as an `n × dim` cloud. Every entry must be finite.
    pub fn new(data: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        check_shape(&data, n, dim)?;
        Ok(Self {
            data,
            n,
            dim,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), n, dim)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn take_labels(&mut self) -> Option<Vec<i64>> {
        self.labels.take()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

impl Points for PointCloud {
    fn n(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Low-dimensional coordinates for the rows of a source cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Embedding {
    pub fn new(coords: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        check_shape(&coords, n, dim)?;
        Ok(Self { coords, n, dim })
    }

    pub(crate) fn from_raw(coords: Vec<f64>, n: usize, dim: usize) -> Self {
        debug_assert_eq!(coords.len(), n * dim);
        Self { coords, n, dim }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// View the embedding as an unlabeled point cloud.
    pub fn to_cloud(&self) -> PointCloud {
        PointCloud {
            data: self.coords.clone(),
            n: self.n,
            dim: self.dim,
            labels: None,
        }
    }

    /// Scale all coordinates so the largest absolute entry is 1. A zero
    /// embedding is left alone.
    pub fn rescale_max_abs(&mut self) {
        let m = self.coords.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            for v in &mut self.coords {
                *v /= m;
            }
        }
    }
}

impl Points for Embedding {
    fn n(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn data(&self) -> &[f64] {
        &self.coords
    }
}

fn check_shape(data: &[f64], n: usize, dim: usize) -> Result<()> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidInput(format!(
            "empty matrix ({n} rows, {dim} columns)"
        )));
    }
    if data.len() != n * dim {
        return Err(Error::InvalidInput(format!(
            "{} values cannot fill {n}×{dim}",
            data.len()
        )));
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite entry at row {}, column {}",
            pos / dim,
            pos % dim
        )));
    }
    Ok(())
}

/// Mean-centre every column, then divide by the largest absolute entry of
/// the centred matrix. When the centred matrix is all zeros the scale step
/// is skipped. Labels are carried through.
pub fn normalize_input(cloud: &PointCloud) -> Result<PointCloud> {
    check_shape(&cloud.data, cloud.n, cloud.dim)?;
    let (n, d) = (cloud.n, cloud.dim);
    let mut means = vec![0.0f64; d];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(cloud.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut data: Vec<f64> = cloud
        .data
        .chunks_exact(d)
        .flat_map(|row| row.iter().zip(&means).map(|(v, m)| v - m))
        .collect();
    let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        for v in &mut data {
            *v /= scale;
        }
    }
    Ok(PointCloud {
        data,
        n,
        dim: d,
        labels: cloud.labels.clone(),
    })
}

/// Full symmetric N×N Euclidean distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Build from an explicit square matrix (row-major). Used for fixtures.
    pub fn from_square(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "{} entries cannot fill a {n}×{n} distance matrix",
                data.len()
            )));
        }
        Ok(Self { n, data })
    }
}

/// Pairwise Euclidean distances. Only the upper triangle is computed; the
/// lower one is mirrored, so the result is exactly symmetric.
pub fn pairwise_distances<P: Points + ?Sized>(points: &P) -> DistanceMatrix {
    let n = points.n();
    let mut data = vec![0.0f64; n * n];
    for i in 0..n {
        let ri = points.row(i);
        for j in (i + 1)..n {
            let d = math::euclidean(ri, points.row(j));
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    DistanceMatrix { n, data }
}
