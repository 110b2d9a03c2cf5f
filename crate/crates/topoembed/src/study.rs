//! Two-objective hyperparameter study: kNN accuracy on a labeled dataset
//! against topology error on the stress manifolds.
//!
//! kNN graphs are cached per (dataset, k) and initial layouts per
//! (dataset, k, initializer); trials of a generation run in parallel.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use topoembed_core::manifolds::standard_stress_set;
use topoembed_core::metrics::{knn_accuracy, SplitSpec};
use topoembed_core::pipeline::{initialize, prepare, refine, Prepared};
use topoembed_core::rng::derive_seed;
use topoembed_core::search::{hyper_nsga2, Nsga2Config, Objectives, TrialParams, TrialStatus};
use topoembed_core::topology::{beta1_count, topology_error_from_counts};
use topoembed_core::{EmbedConfig, Embedding, Error, InitKind, PointCloud, Result};

/// Seed stream of per-trial layout seeds.
const STREAM_TRIAL: u64 = 0x2000;

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub nsga: Nsga2Config,
    pub stress_points: usize,
    /// Neighbors of the accuracy classifier.
    pub eval_k: usize,
    pub reference: Option<Objectives>,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            nsga: Nsga2Config::default(),
            stress_points: 1000,
            eval_k: 15,
            reference: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub index: usize,
    pub params: TrialParams,
    pub objectives: Objectives,
    pub ok: bool,
    pub error: Option<String>,
    pub seconds: f64,
    /// Significant H₁ counts on each stress manifold (empty on failure).
    pub stress_counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub trials: Vec<TrialReport>,
    /// Indices of the Pareto-optimal trials.
    pub front: Vec<usize>,
    pub reference: Option<Objectives>,
    /// Front members strictly better than the reference on both axes.
    pub dominated_by: Option<usize>,
}

type Slot<T> = Arc<OnceLock<std::result::Result<Arc<T>, Error>>>;

struct Cache<K, T> {
    map: Mutex<HashMap<K, Slot<T>>>,
}

impl<K: std::hash::Hash + Eq + Clone, T> Cache<K, T> {
    fn new() -> Self {
        Self { map: Mutex::new(HashMap::new()) }
    }

    fn get(&self, key: &K, make: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
        let slot = self.map.lock().unwrap().entry(key.clone()).or_default().clone();
        slot.get_or_init(|| make().map(Arc::new)).clone()
    }
}

struct Evaluator<'a> {
    /// Index 0 is the labeled dataset, the rest are stress manifolds.
    clouds: Vec<PointCloud>,
    labels: &'a [i64],
    truths: Vec<usize>,
    split: SplitSpec,
    spec: &'a StudySpec,
    graphs: Cache<(usize, usize), Prepared>,
    inits: Cache<(usize, usize, InitKind), Embedding>,
}

struct Outcome {
    objectives: Objectives,
    counts: Vec<usize>,
}

impl Evaluator<'_> {
    /// Layout of dataset `ds`. The initial layout is shared by every trial
    /// with the same (k, init), so it is built under the study seed; the
    /// refinement uses the trial's own seed.
    fn layout(&self, ds: usize, params: &TrialParams, layout_seed: u64) -> Result<Embedding> {
        let init_cfg = EmbedConfig::from_trial(params, self.spec.nsga.seed);
        let k = params.n_neighbors;
        let prep = self.graphs.get(&(ds, k), || prepare(&self.clouds[ds], k))?;
        let init = self.inits.get(&(ds, k, params.init), || initialize(&prep, &init_cfg))?;
        refine(&init, &prep, &EmbedConfig::from_trial(params, layout_seed))
    }

    fn evaluate(&self, index: usize, params: &TrialParams) -> Result<Outcome> {
        let layout_seed = derive_seed(self.spec.nsga.seed, STREAM_TRIAL + index as u64);
        let emb = self.layout(0, params, layout_seed)?;
        let acc = knn_accuracy(&emb, self.labels, self.spec.eval_k, &self.split)?;
        let counts = (1..self.clouds.len())
            .map(|ds| beta1_count(&self.layout(ds, params, layout_seed)?))
            .collect::<Result<Vec<_>>>()?;
        let te = topology_error_from_counts(&counts, &self.truths) as f64;
        Ok(Outcome { objectives: Objectives { acc, te }, counts })
    }
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Run `f`, turning errors and panics into a failure message.
fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(format!("panic: {}", panic_message(p.as_ref()))),
    }
}

/// Run the study on a labeled cloud.
pub fn run_study(data: &PointCloud, spec: &StudySpec) -> Result<StudyReport> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidInput("the study dataset needs labels".into()))?;
    let split = SplitSpec { seed: spec.nsga.seed, ..SplitSpec::default() };
    split.split(labels)?;
    let mut clouds = vec![data.clone()];
    let mut truths = Vec::new();
    for mut m in standard_stress_set(spec.nsga.seed) {
        m.n_points = spec.stress_points;
        clouds.push(m.sample()?);
        truths.push(m.true_beta1());
    }
    let ev = Evaluator {
        clouds,
        labels,
        truths,
        split,
        spec,
        graphs: Cache::new(),
        inits: Cache::new(),
    };
    let extras: Mutex<HashMap<usize, (f64, Vec<usize>)>> = Mutex::new(HashMap::new());
    let study = hyper_nsga2(&spec.nsga, |batch| {
        batch
            .par_iter()
            .map(|(index, params)| {
                let t = Instant::now();
                let res = guarded(|| ev.evaluate(*index, params));
                let secs = t.elapsed().as_secs_f64();
                match res {
                    Ok(o) => {
                        extras.lock().unwrap().insert(*index, (secs, o.counts));
                        Ok(o.objectives)
                    }
                    Err(e) => {
                        extras.lock().unwrap().insert(*index, (secs, Vec::new()));
                        Err(e)
                    }
                }
            })
            .collect()
    })?;
    let extras = extras.into_inner().unwrap();
    let errors: HashMap<usize, String> = study.failures.into_iter().collect();
    let trials: Vec<TrialReport> = study
        .trials
        .iter()
        .map(|t| {
            let (seconds, stress_counts) = extras.get(&t.index).cloned().unwrap_or_default();
            TrialReport {
                index: t.index,
                params: t.params,
                objectives: t.objectives,
                ok: t.status == TrialStatus::Ok,
                error: errors.get(&t.index).cloned(),
                seconds,
                stress_counts,
            }
        })
        .collect();
    let front: Vec<usize> = study.front.trials.iter().map(|t| t.index).collect();
    let dominated_by = spec.reference.map(|r| study.front.strictly_dominating(&r));
    Ok(StudyReport {
        trials,
        front,
        reference: spec.reference,
        dominated_by,
    })
}

fn params_json(p: &TrialParams) -> Value {
    json!({
        "init": p.init.name(),
        "n_neighbors": p.n_neighbors,
        "cutoff": p.cutoff,
        "spread": p.spread,
        "min_dist": p.min_dist,
        "neg_ratio": p.neg_ratio,
        "max_iter": p.max_iter,
    })
}

impl StudyReport {
    pub fn to_json(&self, spec: &StudySpec) -> Value {
        json!({
            "config": {
                "trials": spec.nsga.n_trials,
                "population": spec.nsga.pop_size,
                "seed": spec.nsga.seed,
                "eta_crossover": spec.nsga.eta_crossover,
                "eta_mutation": spec.nsga.eta_mutation,
                "crossover_prob": spec.nsga.crossover_prob,
                "stress_points": spec.stress_points,
                "eval_k": spec.eval_k,
            },
            "trials": self.trials.iter().map(|t| json!({
                "index": t.index,
                "params": params_json(&t.params),
                "objectives": { "acc": t.objectives.acc, "te": t.objectives.te },
                "status": if t.ok { "ok" } else { "failed" },
                "error": t.error,
                "seconds": t.seconds,
                "stress_counts": t.stress_counts,
            })).collect::<Vec<_>>(),
            "front": self.front,
            "reference": self.reference.map(|r| json!({ "acc": r.acc, "te": r.te })),
            "dominated_by": self.dominated_by,
        })
    }

    pub fn best_topology(&self) -> Option<&TrialReport> {
        self.trials
            .iter()
            .filter(|t| t.ok)
            .min_by(|a, b| a.objectives.te.total_cmp(&b.objectives.te).then(b.objectives.acc.total_cmp(&a.objectives.acc)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_and_errors_become_failures() {
        assert_eq!(guarded(|| Ok(3)), Ok(3));
        let e = guarded::<()>(|| Err(Error::InvalidInput("bad".into()))).unwrap_err();
        assert!(e.contains("bad"));
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let p = guarded::<()>(|| panic!("boom {}", 7));
        std::panic::set_hook(prev);
        assert_eq!(p, Err("panic: boom 7".into()));
    }

    #[test]
    fn unlabeled_data_is_rejected() {
        let c = PointCloud::new(vec![0.0; 20], 10, 2).unwrap();
        assert!(run_study(&c, &StudySpec::default()).is_err());
    }
}
