//! Textbook boundary-matrix reduction over every Rips simplex up to
//! dimension 2 within the enclosing radius.

use topoembed_core::{PointCloud, Points};

fn dist(p: &PointCloud, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for (x, y) in p.row(i).iter().zip(p.row(j)) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// (dim, birth, death) sorted, zero-persistence dropped, H2 ignored.
pub fn boundary_reduction(p: &PointCloud) -> Vec<(usize, f64, f64)> {
    let n = p.n();
    let d = |i, j| dist(p, i, j);
    let threshold = (0..n)
        .map(|i| (0..n).map(|j| d(i, j)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);

    // (diam, dim, vertices)
    let mut simplices: Vec<(f64, usize, Vec<usize>)> = (0..n).map(|i| (0.0, 0, vec![i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            if d(i, j) <= threshold {
                simplices.push((d(i, j), 1, vec![i, j]));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let diam = d(i, j).max(d(i, k)).max(d(j, k));
                if diam <= threshold {
                    simplices.push((diam, 2, vec![i, j, k]));
                }
            }
        }
    }
    simplices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let position: std::collections::HashMap<Vec<usize>, usize> =
        simplices.iter().enumerate().map(|(k, s)| (s.2.clone(), k)).collect();

    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|s| {
            let mut c: Vec<usize> = if s.1 == 0 {
                vec![]
            } else {
                (0..s.2.len())
                    .map(|drop| {
                        let face: Vec<usize> = s.2.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, &v)| v).collect();
                        position[&face]
                    })
                    .collect()
            };
            c.sort_unstable();
            c
        })
        .collect();

    let mut low_owner: std::collections::HashMap<usize, usize> = Default::default();
    let mut paired = vec![false; simplices.len()];
    let mut bars = Vec::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner.get(&low) {
                Some(&other) => {
                    let mut sum: Vec<usize> = Vec::new();
                    let (a, b) = (&columns[j], &columns[other]);
                    let (mut x, mut y) = (0, 0);
                    while x < a.len() || y < b.len() {
                        if y == b.len() || (x < a.len() && a[x] < b[y]) {
                            sum.push(a[x]);
                            x += 1;
                        } else if x == a.len() || b[y] < a[x] {
                            sum.push(b[y]);
                            y += 1;
                        } else {
                            x += 1;
                            y += 1;
                        }
                    }
                    columns[j] = sum;
                }
                None => {
                    low_owner.insert(low, j);
                    paired[low] = true;
                    paired[j] = true;
                    let (birth, death) = (simplices[low].0, simplices[j].0);
                    if death > birth && simplices[low].1 <= 1 {
                        bars.push((simplices[low].1, birth, death));
                    }
                    break;
                }
            }
        }
    }
    for (k, s) in simplices.iter().enumerate() {
        if !paired[k] && columns[k].is_empty() && s.1 <= 1 {
            bars.push((s.1, s.0, f64::INFINITY));
        }
    }
    bars.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    bars
}
