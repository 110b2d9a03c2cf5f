//! Acceptance suite. One line per criterion:
//!
//! ```text
//! cargo test --release -p topoembed --test acceptance          # all
//! cargo test --release -p topoembed --test acceptance -- 4 5 9 # a subset
//! ```
//!
//! Criteria run one after another so their wall-clock limits are measured
//! without contention.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoembed::io::{load_matrix, CsvOptions};
use topoembed::study::{run_study, StudySpec};
use topoembed::sweep::{noise_sweep, SweepSpec};
use topoembed_core::layout::{
    attractive_force, attractive_potential, fit_kernel, repulsive_force, repulsive_potential, KernelParams,
};
use topoembed_core::manifolds::{standard_stress_set, ManifoldKind, StressManifold};
use topoembed_core::metrics::{knn_preservation, trustworthiness};
use topoembed_core::pipeline::embed;
use topoembed_core::search::{non_dominated_sort, nsga2_run, Gene, Nsga2Config};
use topoembed_core::topology::{
    beta1_count, dtw, rips_persistence, significant_bars, topology_error_from_counts, RipsOptions, SIGNIFICANCE,
};
use topoembed_core::{EmbedConfig, Embedding, PointCloud, Points};

#[path = "../../core/tests/support/rips_oracle.rs"]
mod rips_oracle;

type Outcome = (bool, String);

fn minutes(limit: f64) -> Duration {
    Duration::from_secs_f64(limit * 60.0)
}

fn within_time(t: Instant, limit: Duration) -> (bool, String) {
    let e = t.elapsed();
    (e <= limit, format!("{:.1}s (limit {:.0}s)", e.as_secs_f64(), limit.as_secs_f64()))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn raw_beta1(cloud: &PointCloud) -> usize {
    significant_bars(&rips_persistence(cloud, &RipsOptions::default()).unwrap(), 1, SIGNIFICANCE)
}

fn noise_sweep_reproduction() -> Outcome {
    let t = Instant::now();
    let rows = noise_sweep(&SweepSpec::default()).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &rows {
        let raw = r.raw_mean();
        if r.sigma <= 0.1 {
            ok &= (raw - 2.0).abs() <= 1.0;
        }
        if r.sigma == 0.2 {
            ok &= raw >= 15.0;
            ok &= (1.5..=5.0).contains(&r.spectral_mean());
        }
        detail.push(format!("σ={} raw={:.1} pca={:.1} spectral={:.1}", r.sigma, raw, r.pca_mean(), r.spectral_mean()));
    }
    let (fast, time) = within_time(t, minutes(20.0));
    (ok && fast, format!("{}; {time}", detail.join(", ")))
}

fn preset_topology_error() -> Outcome {
    let t = Instant::now();
    let mut zeros = 0;
    let mut detail = Vec::new();
    for seed in 0..5 {
        let set = standard_stress_set(seed);
        let cfg = EmbedConfig::topology_tuned().with_seed(seed);
        let counts: Vec<usize> = set
            .iter()
            .map(|m| beta1_count(&embed(&m.sample().unwrap(), &cfg).unwrap()).unwrap())
            .collect();
        let truths: Vec<usize> = set.iter().map(StressManifold::true_beta1).collect();
        let te = topology_error_from_counts(&counts, &truths);
        zeros += usize::from(te == 0);
        detail.push(format!("seed {seed}: counts {counts:?} TE {te}"));
    }
    let (fast, time) = within_time(t, minutes(10.0));
    (zeros >= 3 && fast, format!("TE=0 in {zeros}/5; {}; {time}", detail.join(", ")))
}

fn clean_manifolds() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [ManifoldKind::Figure8, ManifoldKind::Torus] {
        let (mut raw, mut emb) = (Vec::new(), Vec::new());
        for seed in 0..5 {
            let cloud = StressManifold::new(kind, 1000, 0.0, seed).sample().unwrap();
            raw.push(raw_beta1(&cloud));
            let cfg = EmbedConfig::topology_tuned().with_seed(seed);
            emb.push(beta1_count(&embed(&cloud, &cfg).unwrap()).unwrap());
        }
        ok &= raw.iter().chain(&emb).all(|&c| c == 2);
        detail.push(format!("{}: raw {raw:?} embedded {emb:?}", kind.name()));
    }
    (ok, detail.join("; "))
}

fn sorted_bars(p: &PointCloud) -> Vec<(usize, f64, f64)> {
    let dgm = rips_persistence(p, &RipsOptions::default()).unwrap();
    let mut bars: Vec<_> = dgm.bars.iter().map(|b| (b.dim, b.birth, b.death)).collect();
    bars.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    bars
}

fn persistence_oracle() -> Outcome {
    let mut r = rng(4);
    let mut mismatches = 0;
    for _ in 0..20 {
        let n = r.random_range(3..=12);
        let dim = r.random_range(2..=3);
        let p = PointCloud::new((0..n * dim).map(|_| r.random::<f64>()).collect(), n, dim).unwrap();
        mismatches += usize::from(sorted_bars(&p) != rips_oracle::boundary_reduction(&p));
    }
    let square = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let bars = sorted_bars(&square);
    let h1: Vec<_> = bars.iter().filter(|b| b.0 == 1).copied().collect();
    let square_ok = bars == rips_oracle::boundary_reduction(&square) && h1 == [(1, 1.0, 2f64.sqrt())];
    (
        mismatches == 0 && square_ok,
        format!("{mismatches}/20 random clouds differ; square H1 {h1:?}"),
    )
}

/// Least squares over the same 300-point sample by nested grid zooming.
fn kernel_oracle(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let target = |x: f64| if x <= min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() };
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter().map(|&x| (1.0 / (1.0 + a * x.powf(2.0 * b)) - target(x)).powi(2)).sum()
    };
    let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) = (0.01f64, 10.0f64, 0.05f64, 3.0f64);
    let (mut best_a, mut best_b) = (1.0, 1.0);
    for _ in 0..12 {
        let mut best = f64::INFINITY;
        for i in 0..=60 {
            let a = a_lo + (a_hi - a_lo) * i as f64 / 60.0;
            for j in 0..=60 {
                let b = b_lo + (b_hi - b_lo) * j as f64 / 60.0;
                let s = sse(a, b);
                if s < best {
                    (best, best_a, best_b) = (s, a, b);
                }
            }
        }
        let (da, db) = ((a_hi - a_lo) / 15.0, (b_hi - b_lo) / 15.0);
        (a_lo, a_hi) = ((best_a - da).max(1e-6), best_a + da);
        (b_lo, b_hi) = ((best_b - db).max(1e-6), best_b + db);
    }
    (best_a, best_b)
}

fn kernel_fit() -> Outcome {
    let p = fit_kernel(1.0, 0.1).unwrap();
    let (a, b) = kernel_oracle(1.0, 0.1);
    let dev = (0..=3000)
        .map(|i| {
            let x = i as f64 * 0.001;
            let target = if x <= 0.1 { 1.0 } else { (-(x - 0.1f64)).exp() };
            (p.curve(x) - target).abs()
        })
        .fold(0.0, f64::max);
    let ok = (p.a - a).abs() <= 0.02 && (p.b - b).abs() <= 0.02 && dev <= 0.06;
    (ok, format!("fit (a, b) = ({:.4}, {:.4}), oracle ({a:.4}, {b:.4}), max deviation {dev:.4}", p.a, p.b))
}

fn gradient_checks() -> Outcome {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = KernelParams {
            a: r.random_range(0.1..5.0),
            b: r.random_range(0.3..1.5),
            spread: 1.0,
            min_dist: 0.1,
        };
        let d: f64 = r.random_range(0.1..5.0);
        let h = 1e-5 * d;
        let fd_att = (attractive_potential(d + h, &p) - attractive_potential(d - h, &p)) / (2.0 * h);
        let fd_rep = (repulsive_potential(d + h, &p) - repulsive_potential(d - h, &p)) / (2.0 * h);
        let rel = |an: f64, fd: f64| (an - fd).abs() / an.abs().max(fd.abs()).max(1e-300);
        worst = worst.max(rel(attractive_force(d, &p), fd_att));
        worst = worst.max(rel(repulsive_force(d, &p, 1e-3), fd_rep));
    }
    (worst <= 1e-4, format!("worst relative error {worst:.2e}"))
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Fronts by repeatedly peeling the points no remaining point dominates.
fn brute_force_fronts(objs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..objs.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&objs[j], &objs[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Minimize (x², (x − 2)²) on [−1, 3]. Returns the fraction of the final
/// front within 0.05 of the true front and the front's genomes.
fn analytic_front(seed: u64) -> (f64, Vec<f64>) {
    let cfg = Nsga2Config { pop_size: 25, n_trials: 150, seed, ..Nsga2Config::default() };
    let study = nsga2_run(&[Gene::Real { lo: -1.0, hi: 3.0 }], &cfg, &[1e9, 1e9], |batch| {
        batch
            .iter()
            .map(|c| {
                let x = c.values[0];
                Ok(vec![x * x, (x - 2.0) * (x - 2.0)])
            })
            .collect()
    })
    .unwrap();
    let truth: Vec<(f64, f64)> = (0..=20000)
        .map(|i| {
            let t = 2.0 * i as f64 / 20000.0;
            (t * t, (t - 2.0) * (t - 2.0))
        })
        .collect();
    let close = study
        .front
        .iter()
        .filter(|&&i| {
            let o = &study.trials[i].objectives;
            truth.iter().any(|&(f1, f2)| (o[0] - f1).hypot(o[1] - f2) <= 0.05)
        })
        .count();
    let xs = study.front.iter().map(|&i| study.trials[i].values[0]).collect();
    (close as f64 / study.front.len() as f64, xs)
}

fn nsga2_correctness() -> Outcome {
    let mut r = rng(7);
    let mut sort_mismatch = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=40);
        let objs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| r.random_range(0..8) as f64).collect())
            .collect();
        let mut got = non_dominated_sort(&objs);
        got.iter_mut().for_each(|f| f.sort_unstable());
        sort_mismatch += usize::from(got != brute_force_fronts(&objs));
    }
    let (frac, xs) = analytic_front(0);
    let (frac2, xs2) = analytic_front(0);
    let deterministic = frac == frac2 && xs == xs2;
    (
        sort_mismatch == 0 && frac >= 0.8 && deterministic,
        format!(
            "sort mismatches {sort_mismatch}/100; {:.0}% of {} front points within 0.05; deterministic {deterministic}",
            100.0 * frac,
            xs.len()
        ),
    )
}

fn pareto_smoke() -> Outcome {
    let t = Instant::now();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/digits.csv");
    let data = load_matrix(&path, None, &CsvOptions { labels_last: true, header: false }).unwrap();
    let spec = StudySpec {
        nsga: Nsga2Config { pop_size: 25, n_trials: 60, seed: 0, ..Nsga2Config::default() },
        ..StudySpec::default()
    };
    let report = run_study(&data, &spec).unwrap();
    let zero = report.trials.iter().filter(|t| t.ok && t.objectives.te == 0.0).count();
    let failed = report.trials.iter().filter(|t| !t.ok).count();
    let best = report.best_topology().map(|t| (t.objectives.acc, t.objectives.te));
    let (fast, time) = within_time(t, minutes(30.0));
    (
        report.trials.len() == 60 && zero >= 1 && fast,
        format!(
            "{} points, {} trials ({failed} failed), {zero} with TE=0, best (acc, TE) {best:?}; {time}",
            data.n(),
            report.trials.len()
        ),
    )
}

/// Direct definition with ranks from full sorts of each row.
fn trust_oracle(x: &PointCloud, y: &PointCloud, k: usize) -> f64 {
    let n = x.n();
    let order = |p: &PointCloud, i: usize| -> Vec<usize> {
        let d = |j: usize| p.row(i).iter().zip(p.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let mut o: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        o.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
        o
    };
    let mut sum: u64 = 0;
    for i in 0..n {
        let ox = order(x, i);
        let oy = order(y, i);
        for &j in &oy[..k] {
            let r = ox.iter().position(|&l| l == j).unwrap() + 1;
            if r > k {
                sum += (r - k) as u64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 * sum as f64 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0))
}

fn metrics_oracle() -> Outcome {
    let mut r = rng(9);
    let mut mismatches = 0;
    for _ in 0..20 {
        let n = r.random_range(10..=100);
        let d = r.random_range(2..=6);
        let k = r.random_range(1..n / 2);
        let x = PointCloud::new((0..n * d).map(|_| r.random::<f64>()).collect(), n, d).unwrap();
        let y = PointCloud::new((0..n * 2).map(|_| r.random::<f64>()).collect(), n, 2).unwrap();
        mismatches += usize::from(trustworthiness(&x, &y, k).unwrap() != trust_oracle(&x, &y, k));
    }
    let x = PointCloud::new((0..80 * 5).map(|_| r.random::<f64>()).collect(), 80, 5).unwrap();
    let tw = trustworthiness(&x, &x, 10).unwrap();
    let kp = knn_preservation(&x, &x, 10).unwrap();
    (
        mismatches == 0 && tw == 1.0 && kp == 1.0,
        format!("{mismatches}/20 instances differ; identity trustworthiness {tw}, knn preservation {kp}"),
    )
}

fn scaling_check() -> Outcome {
    let (n, d) = (20_000usize, 50usize);
    let mut r = rng(10);
    let centers: Vec<f64> = (0..10 * d).map(|_| r.random_range(-5.0..5.0)).collect();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = i % 10;
        for j in 0..d {
            data.push(centers[c * d + j] + r.random_range(-1.0..1.0));
        }
    }
    let cloud = PointCloud::new(data, n, d).unwrap();
    let mut cfg = EmbedConfig::topology_tuned();
    cfg.layout.max_iter = 128;
    let t = Instant::now();
    let emb = embed(&cloud, &cfg).unwrap();
    let (fast, time) = within_time(t, minutes(5.0));
    let finite = emb.data().iter().all(|v| v.is_finite());
    let sub: Vec<f64> = (0..n).step_by(20).flat_map(|i| emb.row(i).to_vec()).collect();
    let m = sub.len() / 2;
    let count = beta1_count(&Embedding::new(sub, m, 2).unwrap());
    (
        fast && finite && count.is_ok(),
        format!("pipeline {time}; finite {finite}; β1 of a {m}-point subsample {count:?}"),
    )
}

/// Minimum over every monotone warping path.
fn dtw_brute(x: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
    let c = (x[i] - y[j]).abs();
    if i + 1 == x.len() && j + 1 == y.len() {
        return c;
    }
    let mut best = f64::INFINITY;
    if i + 1 < x.len() {
        best = best.min(dtw_brute(x, y, i + 1, j));
    }
    if j + 1 < y.len() {
        best = best.min(dtw_brute(x, y, i, j + 1));
    }
    if i + 1 < x.len() && j + 1 < y.len() {
        best = best.min(dtw_brute(x, y, i + 1, j + 1));
    }
    c + best
}

fn dtw_checks() -> Outcome {
    let mut r = rng(11);
    let seq = |r: &mut ChaCha8Rng| -> Vec<f64> { (0..r.random_range(1..=6)).map(|_| r.random_range(0..5) as f64).collect() };
    let mut mismatches = 0;
    let mut identity_ok = true;
    for _ in 0..50 {
        let (x, y) = (seq(&mut r), seq(&mut r));
        mismatches += usize::from(dtw(&x, &y).unwrap() != dtw_brute(&x, &y, 0, 0));
        identity_ok &= dtw(&x, &x).unwrap() == 0.0;
    }
    let fixture = dtw(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
    (
        mismatches == 0 && identity_ok && fixture == 3.0,
        format!("{mismatches}/50 differ from path enumeration; identity zero {identity_ok}; [1,1,1] vs [2,2,2] = {fixture}"),
    )
}

const CRITERIA: [(&str, fn() -> Outcome); 11] = [
    ("noise sweep", noise_sweep_reproduction),
    ("topology error 0 with the preset", preset_topology_error),
    ("clean manifolds", clean_manifolds),
    ("persistence oracle", persistence_oracle),
    ("kernel fit", kernel_fit),
    ("gradient checks", gradient_checks),
    ("NSGA-II", nsga2_correctness),
    ("Pareto smoke study", pareto_smoke),
    ("metrics oracle", metrics_oracle),
    ("scaling check", scaling_check),
    ("DTW", dtw_checks),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria pass");
}
