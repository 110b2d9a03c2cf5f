//! NSGA-II over a box of mixed real / log-real / integer / categorical
//! genes, plus the two-objective (kNN accuracy ↑, topology error ↓) view
//! used to tune the embedding.
//!
//! Internally every objective is minimized.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::pipeline::InitKind;
use crate::rng::{stage_rng, StageRng, STREAM_SEARCH};

/// `a` Pareto-dominates `b` under minimization.
pub fn dominates_min(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Fast non-dominated sort. Returns fronts of indices, best first; indices
/// within a front are ascending.
pub fn non_dominated_sort(objs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates_min(&objs[p], &objs[q]) {
                dominates_list[p].push(q);
                dominated_by_count[q] += 1;
            } else if dominates_min(&objs[q], &objs[p]) {
                dominates_list[q].push(p);
                dominated_by_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&p| dominated_by_count[p] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominates_list[p] {
                dominated_by_count[q] -= 1;
                if dominated_by_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front. Boundary points of every
/// objective get +∞; an objective with zero range adds nothing to interior
/// points.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0f64; n];
    if n == 0 {
        return dist;
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..m {
        order.sort_by(|&a, &b| front[a][obj].total_cmp(&front[b][obj]).then(a.cmp(&b)));
        let (lo, hi) = (front[order[0]][obj], front[order[n - 1]][obj]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n.saturating_sub(1) {
            let gap = front[order[w + 1]][obj] - front[order[w - 1]][obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// One decision variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gene {
    Real { lo: f64, hi: f64 },
    /// Uniform in log10 space.
    LogReal { lo: f64, hi: f64 },
    /// Searched as a real and rounded on decode.
    Int { lo: i64, hi: i64 },
    /// One of `n` unordered options.
    Choice { n: usize },
}

impl Gene {
    /// Bounds of the encoded (searched) value.
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Gene::Real { lo, hi } => (lo, hi),
            Gene::LogReal { lo, hi } => (libm::log10(lo), libm::log10(hi)),
            Gene::Int { lo, hi } => (lo as f64, hi as f64),
            Gene::Choice { n } => (0.0, (n - 1) as f64),
        }
    }

    /// Encoded value to user-facing value.
    fn decode(&self, x: f64) -> f64 {
        match *self {
            Gene::Real { .. } => x,
            Gene::LogReal { .. } => libm::pow(10.0, x),
            Gene::Int { lo, hi } => math::round(x).clamp(lo as f64, hi as f64),
            Gene::Choice { n } => math::round(x).clamp(0.0, (n - 1) as f64),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.bounds();
        match *self {
            Gene::Choice { n } => rng.random_range(0..n) as f64,
            _ => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nsga2Config {
    pub pop_size: usize,
    /// Total evaluation budget, initial population included.
    pub n_trials: usize,
    pub seed: u64,
    pub crossover_prob: f64,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            pop_size: 25,
            n_trials: 150,
            seed: 0,
            crossover_prob: 0.9,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
        }
    }
}

/// A candidate handed to the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Position in the trial log; stable across runs with the same seed.
    pub index: usize,
    /// Decoded gene values (choices as indices, integers rounded).
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub generation: usize,
    pub values: Vec<f64>,
    /// Minimized objectives (the failure vector for failed trials).
    pub objectives: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub trials: Vec<TrialRecord>,
    /// Indices into `trials` of the final non-dominated set over all
    /// successful trials.
    pub front: Vec<usize>,
}

/// Generational NSGA-II: binary tournaments on (rank, crowding), SBX and
/// polynomial mutation on ordered genes, uniform reset on categorical ones,
/// elitist survival. `evaluate` receives each generation as a batch and
/// may fail individual candidates; those get `failure_objectives`.
pub fn nsga2_run<F>(genes: &[Gene], cfg: &Nsga2Config, failure_objectives: &[f64], mut evaluate: F) -> Result<Study>
where
    F: FnMut(&[Candidate]) -> Vec<core::result::Result<Vec<f64>, String>>,
{
    if genes.is_empty() || cfg.pop_size < 2 || cfg.n_trials == 0 {
        return Err(Error::InvalidParameter("NSGA-II needs genes, pop_size ≥ 2 and n_trials ≥ 1".into()));
    }
    let mut rng = stage_rng(cfg.seed, STREAM_SEARCH);
    let mut trials: Vec<TrialRecord> = Vec::with_capacity(cfg.n_trials);
    let mut genomes: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_trials);

    let mut eval_batch = |batch: Vec<Vec<f64>>, generation: usize, trials: &mut Vec<TrialRecord>, genomes: &mut Vec<Vec<f64>>| {
        let start = trials.len();
        let candidates: Vec<Candidate> = batch
            .iter()
            .enumerate()
            .map(|(k, g)| Candidate {
                index: start + k,
                values: g.iter().zip(genes).map(|(&x, gene)| gene.decode(x)).collect(),
            })
            .collect();
        let results = evaluate(&candidates);
        assert_eq!(results.len(), candidates.len(), "evaluator must answer every candidate");
        for ((cand, genome), res) in candidates.into_iter().zip(batch).zip(results) {
            let (objectives, failure) = match res {
                Ok(o) => (o, None),
                Err(msg) => (failure_objectives.to_vec(), Some(msg)),
            };
            trials.push(TrialRecord {
                index: cand.index,
                generation,
                values: cand.values,
                objectives,
                failure,
            });
            genomes.push(genome);
        }
    };

    let first = cfg.pop_size.min(cfg.n_trials);
    let initial: Vec<Vec<f64>> = (0..first).map(|_| genes.iter().map(|g| g.sample(&mut rng)).collect()).collect();
    eval_batch(initial, 0, &mut trials, &mut genomes);
    let mut population: Vec<usize> = (0..trials.len()).collect();
    let mut generation = 0;

    while trials.len() < cfg.n_trials {
        generation += 1;
        let (rank, crowd) = rank_and_crowding(&population, &trials);
        let wanted = cfg.pop_size.min(cfg.n_trials - trials.len());
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(wanted + 1);
        while offspring.len() < wanted {
            let p1 = tournament(&mut rng, &population, &rank, &crowd);
            let p2 = tournament(&mut rng, &population, &rank, &crowd);
            let (mut c1, mut c2) = (genomes[p1].clone(), genomes[p2].clone());
            if rng.random::<f64>() < cfg.crossover_prob {
                crossover(&mut rng, genes, cfg.eta_crossover, &mut c1, &mut c2);
            }
            mutate(&mut rng, genes, cfg.eta_mutation, &mut c1);
            mutate(&mut rng, genes, cfg.eta_mutation, &mut c2);
            offspring.push(c1);
            if offspring.len() < wanted {
                offspring.push(c2);
            }
        }
        let start = trials.len();
        eval_batch(offspring, generation, &mut trials, &mut genomes);
        let mut pool = population.clone();
        pool.extend(start..trials.len());
        population = survive(&pool, &trials, cfg.pop_size);
    }

    let ok: Vec<usize> = trials.iter().filter(|t| t.failure.is_none()).map(|t| t.index).collect();
    let front = if ok.is_empty() {
        Vec::new()
    } else {
        let objs: Vec<Vec<f64>> = ok.iter().map(|&i| trials[i].objectives.clone()).collect();
        non_dominated_sort(&objs)[0].iter().map(|&k| ok[k]).collect()
    };
    Ok(Study { trials, front })
}

/// Rank (front number) and crowding distance per trial index in `members`.
fn rank_and_crowding(members: &[usize], trials: &[TrialRecord]) -> (Vec<usize>, Vec<f64>) {
    let objs: Vec<Vec<f64>> = members.iter().map(|&i| trials[i].objectives.clone()).collect();
    let mut rank = vec![usize::MAX; trials.len()];
    let mut crowd = vec![0.0; trials.len()];
    for (r, front) in non_dominated_sort(&objs).iter().enumerate() {
        let fobjs: Vec<Vec<f64>> = front.iter().map(|&k| objs[k].clone()).collect();
        for (&k, c) in front.iter().zip(crowding_distance(&fobjs)) {
            rank[members[k]] = r;
            crowd[members[k]] = c;
        }
    }
    (rank, crowd)
}

fn tournament(rng: &mut StageRng, population: &[usize], rank: &[usize], crowd: &[f64]) -> usize {
    let a = population[rng.random_range(0..population.len())];
    let b = population[rng.random_range(0..population.len())];
    match rank[a].cmp(&rank[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if crowd[b] > crowd[a] {
                b
            } else {
                a
            }
        }
    }
}

/// Elitist survival: whole fronts while they fit, then the most isolated
/// members of the first front that does not.
fn survive(pool: &[usize], trials: &[TrialRecord], size: usize) -> Vec<usize> {
    let objs: Vec<Vec<f64>> = pool.iter().map(|&i| trials[i].objectives.clone()).collect();
    let mut next = Vec::with_capacity(size);
    for front in non_dominated_sort(&objs) {
        if next.len() + front.len() <= size {
            next.extend(front.iter().map(|&k| pool[k]));
            if next.len() == size {
                break;
            }
            continue;
        }
        let fobjs: Vec<Vec<f64>> = front.iter().map(|&k| objs[k].clone()).collect();
        let crowd = crowding_distance(&fobjs);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
        for &w in order.iter().take(size - next.len()) {
            next.push(pool[front[w]]);
        }
        break;
    }
    next
}

fn crossover(rng: &mut StageRng, genes: &[Gene], eta: f64, c1: &mut [f64], c2: &mut [f64]) {
    for (g, gene) in genes.iter().enumerate() {
        if rng.random::<f64>() >= 0.5 {
            continue;
        }
        if let Gene::Choice { .. } = gene {
            core::mem::swap(&mut c1[g], &mut c2[g]);
            continue;
        }
        let (lo, hi) = gene.bounds();
        let (x1, x2) = (c1[g].min(c2[g]), c1[g].max(c2[g]));
        if x2 - x1 < 1e-14 {
            continue;
        }
        // Bounded simulated binary crossover.
        let u = rng.random::<f64>();
        let spread_child = |beta_bound: f64| {
            let alpha = 2.0 - libm::pow(beta_bound, -(eta + 1.0));
            let betaq = if u <= 1.0 / alpha {
                libm::pow(u * alpha, 1.0 / (eta + 1.0))
            } else {
                libm::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0))
            };
            betaq
        };
        let bq1 = spread_child(1.0 + 2.0 * (x1 - lo) / (x2 - x1));
        let bq2 = spread_child(1.0 + 2.0 * (hi - x2) / (x2 - x1));
        let y1 = (0.5 * ((x1 + x2) - bq1 * (x2 - x1))).clamp(lo, hi);
        let y2 = (0.5 * ((x1 + x2) + bq2 * (x2 - x1))).clamp(lo, hi);
        if rng.random::<bool>() {
            c1[g] = y2;
            c2[g] = y1;
        } else {
            c1[g] = y1;
            c2[g] = y2;
        }
    }
}

fn mutate(rng: &mut StageRng, genes: &[Gene], eta: f64, c: &mut [f64]) {
    let rate = 1.0 / genes.len() as f64;
    for (g, gene) in genes.iter().enumerate() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        if let Gene::Choice { .. } = gene {
            c[g] = gene.sample(rng);
            continue;
        }
        let (lo, hi) = gene.bounds();
        if hi <= lo {
            continue;
        }
        let x = c[g];
        let (d1, d2) = ((x - lo) / (hi - lo), (hi - x) / (hi - lo));
        let u = rng.random::<f64>();
        let p = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * libm::pow(1.0 - d1, eta + 1.0);
            libm::pow(v, p) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * libm::pow(1.0 - d2, eta + 1.0);
            1.0 - libm::pow(v, p)
        };
        c[g] = (x + dq * (hi - lo)).clamp(lo, hi);
    }
}

// ---------------------------------------------------------------------------
// Two-objective view for embedding hyperparameters.

/// kNN accuracy (maximized) and topology error (minimized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    pub acc: f64,
    pub te: f64,
}

impl Objectives {
    /// Assigned to trials whose evaluation failed.
    pub const FAILED: Objectives = Objectives { acc: 0.0, te: 1000.0 };

    fn as_min(&self) -> Vec<f64> {
        vec![-self.acc, self.te]
    }

    fn from_min(v: &[f64]) -> Self {
        Self { acc: -v[0], te: v[1] }
    }
}

/// `a` is at least as good on both axes and strictly better on one.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    a.acc >= b.acc && a.te <= b.te && (a.acc > b.acc || a.te < b.te)
}

/// Hyperparameters of one embedding trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialParams {
    pub init: InitKind,
    pub n_neighbors: usize,
    pub cutoff: f64,
    pub spread: f64,
    pub min_dist: f64,
    pub neg_ratio: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub params: TrialParams,
    pub objectives: Objectives,
    pub status: TrialStatus,
}

/// Gene layout of [`TrialParams`], in field order.
pub fn hyper_search_space() -> [Gene; 7] {
    [
        Gene::Choice { n: 4 },
        Gene::Int { lo: 8, hi: 48 },
        Gene::Real { lo: 2.0, hi: 42.0 },
        Gene::Real { lo: 0.5, hi: 4.0 },
        Gene::LogReal { lo: 1e-4, hi: 1e-1 },
        Gene::Int { lo: 2, hi: 32 },
        Gene::Int { lo: 64, hi: 256 },
    ]
}

impl TrialParams {
    pub fn from_values(v: &[f64]) -> Self {
        Self {
            init: InitKind::ALL[v[0] as usize],
            n_neighbors: v[1] as usize,
            cutoff: v[2],
            spread: v[3],
            min_dist: v[4],
            neg_ratio: v[5] as usize,
            max_iter: v[6] as usize,
        }
    }

    /// Inside the search box.
    pub fn in_search_box(&self) -> bool {
        (8..=48).contains(&self.n_neighbors)
            && (2.0..=42.0).contains(&self.cutoff)
            && (0.5..=4.0).contains(&self.spread)
            && (1e-4 * (1.0 - 1e-9)..=1e-1 * (1.0 + 1e-9)).contains(&self.min_dist)
            && (2..=32).contains(&self.neg_ratio)
            && (64..=256).contains(&self.max_iter)
    }
}

/// Result of a hyperparameter study.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperStudy {
    pub trials: Vec<Trial>,
    pub front: ParetoFront,
    /// Failure messages keyed by trial index.
    pub failures: Vec<(usize, String)>,
}

/// NSGA-II over [`hyper_search_space`]. `evaluate` maps a batch of trial
/// parameters (with their log indices) to objectives or a failure message.
pub fn hyper_nsga2<F>(cfg: &Nsga2Config, mut evaluate: F) -> Result<HyperStudy>
where
    F: FnMut(&[(usize, TrialParams)]) -> Vec<core::result::Result<Objectives, String>>,
{
    let study = nsga2_run(&hyper_search_space(), cfg, &Objectives::FAILED.as_min(), |batch| {
        let params: Vec<(usize, TrialParams)> = batch.iter().map(|c| (c.index, TrialParams::from_values(&c.values))).collect();
        evaluate(&params).into_iter().map(|r| r.map(|o| o.as_min())).collect()
    })?;
    let failures = study
        .trials
        .iter()
        .filter_map(|t| t.failure.clone().map(|m| (t.index, m)))
        .collect();
    let trials: Vec<Trial> = study
        .trials
        .iter()
        .map(|t| Trial {
            index: t.index,
            params: TrialParams::from_values(&t.values),
            objectives: Objectives::from_min(&t.objectives),
            status: if t.failure.is_some() { TrialStatus::Failed } else { TrialStatus::Ok },
        })
        .collect();
    let front = pareto_front(&trials)?;
    Ok(HyperStudy { trials, front, failures })
}

/// Non-dominated subset of a study's successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub trials: Vec<Trial>,
}

impl ParetoFront {
    /// Members strictly better than `reference` on both axes at once.
    pub fn strictly_dominating(&self, reference: &Objectives) -> usize {
        self.trials
            .iter()
            .filter(|t| t.objectives.acc > reference.acc && t.objectives.te < reference.te)
            .count()
    }
}

pub fn pareto_front(trials: &[Trial]) -> Result<ParetoFront> {
    let ok: Vec<&Trial> = trials.iter().filter(|t| t.status == TrialStatus::Ok).collect();
    if ok.is_empty() {
        return Err(Error::EmptyStudy);
    }
    let members = ok
        .iter()
        .filter(|t| !ok.iter().any(|o| dominates(&o.objectives, &t.objectives)))
        .map(|t| (*t).clone())
        .collect();
    Ok(ParetoFront { trials: members })
}
