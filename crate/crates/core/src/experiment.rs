//! Multi-seed comparison batches: every algorithm runs once per seed on a
//! shared instance, each run writes its own log file.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bench_io::{apply_reference, run_file_name, write_runlog_csv, Reference, ReferenceKind};
use crate::error::{Error, Result};
use crate::qcore::UbqpInstance;
use crate::rng::derive_seed;
use crate::search::{ils, lsils, RunResult, SearchConfig};
use crate::smoothing::ToyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ils,
    Lsils(ToyKind),
}

impl Algorithm {
    /// File-name label: `ils`, `lsils-plusminusi`, ...
    pub fn label(&self) -> String {
        match self {
            Algorithm::Ils => "ils".into(),
            Algorithm::Lsils(kind) => format!("lsils-{kind}"),
        }
    }

    pub fn run(&self, inst: &UbqpInstance, base: &SearchConfig, seed: u64) -> Result<RunResult> {
        let mut config = base.clone();
        config.seed = seed;
        match self {
            Algorithm::Ils => ils(inst, &config),
            Algorithm::Lsils(kind) => {
                config.toy_kind = *kind;
                lsils(inst, &config)
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `ils`, `lsils:<toy>` or `lsils-<toy>`.
impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ils" {
            return Ok(Algorithm::Ils);
        }
        let kind = s
            .strip_prefix("lsils:")
            .or_else(|| s.strip_prefix("lsils-"))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown algorithm {s:?} (expected ils or lsils:<toy>)"
                ))
            })?;
        Ok(Algorithm::Lsils(kind.parse()?))
    }
}

/// Seed of run `index` under `master`.
pub fn run_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, "run", index as u64)
}

#[derive(Clone, Debug)]
pub struct BatchSpec {
    pub instance_name: String,
    pub algorithms: Vec<Algorithm>,
    pub seeds: usize,
    pub master_seed: u64,
    /// Shared settings; `seed` and `toy_kind` are overridden per run.
    pub config: SearchConfig,
    pub optimum: Option<i64>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub seed_index: usize,
    pub seed: u64,
    pub result: RunResult,
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub instance_name: String,
    /// Ordered by algorithm (as listed), then seed index.
    pub runs: Vec<RunOutcome>,
    pub reference: Option<Reference>,
}

pub fn run_batch(inst: &UbqpInstance, plan: &BatchSpec) -> Result<BatchResult> {
    if plan.seeds == 0 || plan.algorithms.is_empty() {
        return Err(Error::InvalidParameter(
            "a batch needs at least one seed and one algorithm".into(),
        ));
    }
    plan.config.validate(inst.n())?;
    let tasks: Vec<(Algorithm, usize)> = plan
        .algorithms
        .iter()
        .flat_map(|&a| (0..plan.seeds).map(move |s| (a, s)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(algorithm, seed_index)| {
                let seed = run_seed(plan.master_seed, seed_index);
                let result = algorithm.run(inst, &plan.config, seed)?;
                Ok(RunOutcome {
                    algorithm,
                    seed_index,
                    seed,
                    result,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let runs = match plan.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let reference = match plan.optimum {
        Some(value) => Some(Reference {
            kind: ReferenceKind::Optimum,
            value,
        }),
        None => runs
            .iter()
            .map(|r| r.result.best_value)
            .max()
            .filter(|&v| v != 0)
            .map(|value| Reference {
                kind: ReferenceKind::BestFound,
                value,
            }),
    };
    Ok(BatchResult {
        instance_name: plan.instance_name.clone(),
        runs,
        reference,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub mean_best: f64,
    pub std_best: f64,
    pub min_best: i64,
    pub max_best: i64,
    pub mean_excess: Option<f64>,
}

impl BatchResult {
    /// Writes `<instance>_<algo>_<seed>.csv` for every run.
    pub fn write_csvs(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let mut paths = Vec::with_capacity(self.runs.len());
        for run in &self.runs {
            let mut records = run.result.log.records.clone();
            if let Some(r) = &self.reference {
                apply_reference(&mut records, r)?;
            }
            let path = out_dir.join(run_file_name(
                &self.instance_name,
                &run.algorithm.label(),
                run.seed_index,
            ));
            write_runlog_csv(&records, self.reference.as_ref(), &path)?;
            paths.push(path);
        }
        Ok(paths)
    }

    pub fn summaries(&self) -> Vec<AlgorithmSummary> {
        let mut algos: Vec<Algorithm> = Vec::new();
        for r in &self.runs {
            if !algos.contains(&r.algorithm) {
                algos.push(r.algorithm);
            }
        }
        algos
            .into_iter()
            .map(|algorithm| {
                let values: Vec<i64> = self
                    .runs
                    .iter()
                    .filter(|r| r.algorithm == algorithm)
                    .map(|r| r.result.best_value)
                    .collect();
                let count = values.len() as f64;
                let mean = values.iter().map(|&v| v as f64).sum::<f64>() / count;
                let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / count;
                let mean_excess = self.reference.map(|r| (mean - r.value as f64) / r.value as f64);
                AlgorithmSummary {
                    algorithm,
                    runs: values.len(),
                    mean_best: mean,
                    std_best: var.sqrt(),
                    min_best: values.iter().copied().min().unwrap_or(0),
                    max_best: values.iter().copied().max().unwrap_or(0),
                    mean_excess,
                }
            })
            .collect()
    }

    pub fn summary(&self, algorithm: Algorithm) -> Option<AlgorithmSummary> {
        self.summaries().into_iter().find(|s| s.algorithm == algorithm)
    }

    /// Plain-text comparison table.
    pub fn comparison_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<20} {:>5} {:>14} {:>12} {:>12} {:>12} {:>12}",
            "algorithm", "runs", "mean_best", "std", "min", "max", "mean_excess"
        )
        .expect("writing to a String");
        for s in self.summaries() {
            let excess = s
                .mean_excess
                .map_or_else(|| "-".to_string(), |e| format!("{e:.6}"));
            writeln!(
                out,
                "{:<20} {:>5} {:>14.2} {:>12.2} {:>12} {:>12} {:>12}",
                s.algorithm.label(),
                s.runs,
                s.mean_best,
                s.std_best,
                s.min_best,
                s.max_best,
                excess
            )
            .expect("writing to a String");
        }
        if let Some(r) = &self.reference {
            let kind = match r.kind {
                ReferenceKind::Optimum => "optimum",
                ReferenceKind::BestFound => "best-found",
            };
            writeln!(out, "reference {kind} {}", r.value).expect("writing to a String");
        }
        out
    }
}
