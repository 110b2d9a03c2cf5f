//! Leading eigenpairs of sparse symmetric operators.
//!
//! Small problems are handed to a dense symmetric eigensolver. Larger ones
//! use block LOBPCG with an orthonormalized search basis `[X, R, P]` and a
//! dense Rayleigh–Ritz step. Either way the returned pairs satisfy
//! ‖Av − λv‖₂ ≤ tol for unit `v`, or the call fails with the last residual.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;

/// Above this size the dense path is too slow to be worth it.
pub(crate) const DENSE_LIMIT: usize = 1500;

/// Compressed sparse row symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Build from undirected weighted pairs (each listed once, `i != j`).
    pub(crate) fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in pairs {
            counts[i + 1] += 1;
            counts[j + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut fill = counts;
        let nnz = row_ptr[n];
        let mut cols = vec![0usize; nnz];
        let mut vals = vec![0.0f64; nnz];
        for &(i, j, w) in pairs {
            cols[fill[i]] = j;
            vals[fill[i]] = w;
            fill[i] += 1;
            cols[fill[j]] = i;
            vals[fill[j]] = w;
            fill[j] += 1;
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    /// Replace each entry w_ij by w_ij · s_i · s_j.
    pub(crate) fn scale_sym(&mut self, s: &[f64]) {
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.vals[p] *= s[i] * s[self.cols[p]];
            }
        }
    }

    pub(crate) fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            y[i] = acc;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] += self.vals[p];
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn residual(op: &SparseSym, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.matvec(v, &mut av);
    axpy(-lambda, v, &mut av);
    norm(&av) / norm(v)
}

/// The `k` largest eigenpairs of `op` restricted to the orthogonal
/// complement of the unit vector `trivial`.
pub(crate) fn top_eigenpairs(
    op: &SparseSym,
    k: usize,
    trivial: &[f64],
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenPairs> {
    if op.n() <= DENSE_LIMIT {
        dense_top(op, k, trivial, tol)
    } else {
        lobpcg_top(op, k, trivial, tol, max_iter, seed)
    }
}

fn dense_top(op: &SparseSym, k: usize, trivial: &[f64], tol: f64) -> Result<EigenPairs> {
    let n = op.n();
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    // Drop the eigenvector with the largest overlap with the trivial one.
    let skip = *order
        .iter()
        .max_by(|&&a, &&b| {
            let oa = dot(eig.eigenvectors.column(a).as_slice(), trivial).abs();
            let ob = dot(eig.eigenvectors.column(b).as_slice(), trivial).abs();
            oa.total_cmp(&ob)
        })
        .expect("nonempty");
    let mut out = EigenPairs {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for &c in order.iter().filter(|&&c| c != skip).take(k) {
        let v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let lambda = eig.eigenvalues[c];
        let r = residual(op, lambda, &v);
        if r > tol {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: r,
            });
        }
        out.values.push(lambda);
        out.vectors.push(v);
        out.residuals.push(r);
    }
    Ok(out)
}

/// Project out `u` (unit) from `v`.
fn deflate(v: &mut [f64], u: &[f64]) {
    let c = dot(v, u);
    axpy(-c, u, v);
}

/// Modified Gram–Schmidt, run twice. Columns that collapse are dropped.
fn orthonormalize(cols: &mut Vec<Vec<f64>>, trivial: &[f64]) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols.drain(..) {
        let start = norm(&v);
        if start == 0.0 {
            continue;
        }
        for _ in 0..2 {
            deflate(&mut v, trivial);
            for q in &out {
                let c = dot(&v, q);
                axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-10 * start && nv > 1e-300 {
            for x in &mut v {
                *x /= nv;
            }
            out.push(v);
        }
    }
    *cols = out;
}

fn lobpcg_top(
    op: &SparseSym,
    k: usize,
    trivial: &[f64],
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenPairs> {
    let n = op.n();
    let m = (k + 4).max(2 * k).min(n.saturating_sub(1)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    orthonormalize(&mut x, trivial);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut values = vec![0.0; x.len()];
    let mut last_residual = f64::INFINITY;

    for iter in 0..=max_iter {
        // Ritz values and residuals for the current block.
        let mut ax: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let mut y = vec![0.0; n];
                op.matvec(v, &mut y);
                y
            })
            .collect();
        let mut r: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        let mut res_norms = Vec::with_capacity(x.len());
        for (i, v) in x.iter().enumerate() {
            values[i] = dot(v, &ax[i]);
            let mut ri = core::mem::take(&mut ax[i]);
            axpy(-values[i], v, &mut ri);
            deflate(&mut ri, trivial);
            res_norms.push(norm(&ri));
            r.push(ri);
        }
        last_residual = res_norms[..k].iter().cloned().fold(0.0, f64::max);
        if last_residual <= tol {
            let residuals: Vec<f64> = x[..k].iter().zip(&values).map(|(v, &l)| residual(op, l, v)).collect();
            if residuals.iter().all(|&r| r <= tol) {
                return Ok(EigenPairs {
                    values: values[..k].to_vec(),
                    vectors: x.into_iter().take(k).collect(),
                    residuals,
                });
            }
        }
        if iter == max_iter {
            break;
        }

        let mx = x.len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(mx + r.len() + p.len());
        basis.extend(x.iter().cloned());
        basis.extend(r);
        basis.extend(p.drain(..));
        orthonormalize(&mut basis, trivial);
        let q = basis.len();
        let abasis: Vec<Vec<f64>> = basis
            .iter()
            .map(|v| {
                let mut y = vec![0.0; n];
                op.matvec(v, &mut y);
                y
            })
            .collect();
        let mut gram = DMatrix::<f64>::zeros(q, q);
        for a in 0..q {
            for b in a..q {
                let g = dot(&basis[a], &abasis[b]);
                gram[(a, b)] = g;
                gram[(b, a)] = g;
            }
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let keep = mx.min(q);
        let mut new_x = Vec::with_capacity(keep);
        let mut new_p = Vec::with_capacity(keep);
        for &c in order.iter().take(keep) {
            let coef = eig.eigenvectors.column(c);
            let mut xv = vec![0.0; n];
            let mut pv = vec![0.0; n];
            for (b, v) in basis.iter().enumerate() {
                axpy(coef[b], v, &mut xv);
                if b >= mx {
                    axpy(coef[b], v, &mut pv);
                }
            }
            new_x.push(xv);
            new_p.push(pv);
        }
        x = new_x;
        orthonormalize(&mut x, trivial);
        if x.len() < k {
            break;
        }
        values.resize(x.len(), 0.0);
        p = new_p;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: last_residual,
    })
}
