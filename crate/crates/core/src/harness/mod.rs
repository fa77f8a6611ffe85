//! Experiment runner, result files and statistics.

mod config;
pub mod dynamics;
pub mod plots;
mod stats;

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{Instance, Quantization};
use crate::rng::derive_seed;
use crate::search::{calibrate_nc_k, reference_k_cap, Algorithm, RunRecord};

pub use config::{
    grid, parse_list, parse_nc_cap, AlgorithmKind, Cell, ExperimentConfig, NcCap, DEFAULT_BUDGET, DEFAULT_C_GRID,
    DEFAULT_K_VALUES, DEFAULT_NC_CALIBRATION_RUNS, DEFAULT_Q_VALUES, DEFAULT_RUNS,
};
pub use dynamics::{dynamics_summary, DynamicsSummary};
pub use stats::{
    normalize_fitness, wilcoxon_exact, wilcoxon_normal, wilcoxon_paired, Direction, SignedRanks, WilcoxonResult,
    EXACT_LIMIT,
};

/// Column names of the results file, in order.
pub const RESULTS_HEADER: &str =
    "n,k,q,instance_seed,algorithm,c,run,best_total,best_norm,evals,restarts,plateaus,mean_plateau_size";

/// One run of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub k: usize,
    #[serde(with = "quantization_text")]
    pub q: Quantization,
    pub instance_seed: u64,
    pub algorithm: String,
    pub c: Option<f64>,
    pub run: u64,
    pub best_total: u64,
    pub best_norm: f64,
    pub evals: u64,
    pub restarts: u64,
    pub plateaus: u64,
    pub mean_plateau_size: f64,
}

/// Identity of a row: everything that selects the run, nothing it produced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub n: usize,
    pub k: usize,
    pub q: Quantization,
    pub instance_seed: u64,
    pub algorithm: String,
    pub c_bits: Option<u64>,
    pub run: u64,
}

impl ResultRow {
    pub fn from_record(cell: Cell, instance_seed: u64, run: u64, record: &RunRecord) -> Self {
        Self {
            n: cell.n,
            k: cell.k,
            q: cell.q,
            instance_seed,
            algorithm: record.algorithm.id().to_string(),
            c: record.algorithm.c(),
            run,
            best_total: record.best_fitness.total,
            best_norm: record.best_norm(),
            evals: record.evaluations_used,
            restarts: record.restarts,
            plateaus: record.plateau_count() as u64,
            mean_plateau_size: record.mean_plateau_size(),
        }
    }

    pub fn cell(&self) -> Cell {
        Cell {
            n: self.n,
            k: self.k,
            q: self.q,
        }
    }

    pub fn key(&self) -> RowKey {
        RowKey {
            n: self.n,
            k: self.k,
            q: self.q,
            instance_seed: self.instance_seed,
            algorithm: self.algorithm.clone(),
            c_bits: self.c.map(f64::to_bits),
            run: self.run,
        }
    }

    /// Algorithm label with its parameter, e.g. `vegas(c=100)`.
    pub fn label(&self) -> String {
        match self.c {
            Some(c) => format!("{}(c={c})", self.algorithm),
            None => self.algorithm.clone(),
        }
    }
}

mod quantization_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::landscape::Quantization;

    pub fn serialize<S: Serializer>(q: &Quantization, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(q)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Quantization, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A single unit of work of an experiment.
#[derive(Debug, Clone)]
pub struct Job {
    pub cell: Cell,
    pub instance_seed: u64,
    pub algorithm: Algorithm,
    pub run: u64,
    pub seed: u64,
}

impl Job {
    pub fn key(&self) -> RowKey {
        RowKey {
            n: self.cell.n,
            k: self.cell.k,
            q: self.cell.q,
            instance_seed: self.instance_seed,
            algorithm: self.algorithm.id().to_string(),
            c_bits: self.algorithm.c().map(f64::to_bits),
            run: self.run,
        }
    }
}

/// Seed of run `run` of `algorithm` on the instance `(cell, instance_seed)`.
pub fn run_seed(master_seed: u64, cell: Cell, instance_seed: u64, algorithm: &str, run: u64) -> u64 {
    let label = format!("{}/{}/{}/{}/{}", cell.n, cell.k, cell.q, instance_seed, algorithm);
    derive_seed(master_seed, &label, run)
}

/// Instances of the experiment keyed by `(cell, instance seed)`.
pub fn build_instances(config: &ExperimentConfig) -> Result<HashMap<(Cell, u64), Instance>> {
    let mut out = HashMap::new();
    for &cell in &config.cells {
        for &seed in &config.instance_seeds {
            out.insert((cell, seed), Instance::generate(cell.n, cell.k, cell.q, seed)?);
        }
    }
    Ok(out)
}

fn nc_cap_for(config: &ExperimentConfig, cell: Cell, instance_seed: u64, instance: &Instance) -> Result<u64> {
    match config.nc_cap {
        NcCap::Fixed(cap) => Ok(cap),
        NcCap::Reference => reference_k_cap(cell.k, cell.q)
            .filter(|_| cell.n == 64)
            .ok_or_else(|| Error::param(format!("no reference Netcrawler cap for {cell:?}"))),
        NcCap::Calibrate { runs } => {
            let label = format!("calibrate/{}/{}/{}/{}", cell.n, cell.k, cell.q, instance_seed);
            let seed = derive_seed(config.master_seed, &label, 0);
            Ok(calibrate_nc_k(instance, runs, config.budget, seed))
        }
    }
}

/// Every job of the experiment in canonical order: cell, instance seed,
/// algorithm (VEGAS expanded over the C grid), run.
pub fn plan_jobs(config: &ExperimentConfig, instances: &HashMap<(Cell, u64), Instance>) -> Result<Vec<Job>> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &cell in &config.cells {
        for &instance_seed in &config.instance_seeds {
            let instance = &instances[&(cell, instance_seed)];
            let mut algorithms = Vec::new();
            for kind in &config.algorithms {
                match kind {
                    AlgorithmKind::Fihc => algorithms.push(Algorithm::Fihc),
                    AlgorithmKind::Nc => algorithms.push(Algorithm::Netcrawler {
                        k_cap: nc_cap_for(config, cell, instance_seed, instance)?,
                    }),
                    AlgorithmKind::F2ns => algorithms.push(Algorithm::F2ns),
                    AlgorithmKind::Vegas => algorithms.extend(config.c_values.iter().map(|&c| Algorithm::Vegas { c })),
                }
            }
            for algorithm in algorithms {
                for run in 0..config.runs {
                    jobs.push(Job {
                        cell,
                        instance_seed,
                        algorithm,
                        run,
                        seed: run_seed(config.master_seed, cell, instance_seed, algorithm.id(), run),
                    });
                }
            }
        }
    }
    Ok(jobs)
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows_written: usize,
    pub rows_skipped: usize,
    /// Jobs whose run panicked, with the panic message. They have no row and
    /// are retried on the next resume.
    pub failures: Vec<(RowKey, String)>,
}

/// Runs `jobs` on a pool of `workers` threads and hands the results to
/// `sink` in job order, a chunk at a time.
pub fn execute<S>(
    jobs: &[Job],
    instances: &HashMap<(Cell, u64), Instance>,
    budget: u64,
    workers: usize,
    mut sink: S,
) -> Result<Vec<(RowKey, String)>>
where
    S: FnMut(&Job, &RunRecord) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("cannot start {workers} workers: {e}")))?;
    let chunk = (workers * 16).max(32);
    let mut failures = Vec::new();
    for batch in jobs.chunks(chunk) {
        let results: Vec<std::result::Result<RunRecord, String>> = pool.install(|| {
            batch
                .par_iter()
                .map(|job| {
                    let instance = &instances[&(job.cell, job.instance_seed)];
                    catch_unwind(AssertUnwindSafe(|| job.algorithm.run(instance, budget, job.seed)))
                        .map_err(panic_message)
                })
                .collect()
        });
        for (job, result) in batch.iter().zip(results) {
            match result {
                Ok(record) => sink(job, &record)?,
                Err(message) => failures.push((job.key(), message)),
            }
        }
    }
    Ok(failures)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "run panicked".to_string()
    }
}

/// Runs the experiment and appends its rows to `config.output`.
///
/// Rows already present in the output file are skipped, so an interrupted
/// experiment resumes where it stopped. Rows are written in canonical job
/// order regardless of the worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let path = config.output.as_path();
    let existing: HashSet<RowKey> = if path.exists() {
        read_results(path)?.iter().map(ResultRow::key).collect()
    } else {
        HashSet::new()
    };

    let instances = build_instances(config)?;
    let all_jobs = plan_jobs(config, &instances)?;
    let total = all_jobs.len();
    let jobs: Vec<Job> = all_jobs.into_iter().filter(|j| !existing.contains(&j.key())).collect();

    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    if fresh {
        writeln!(out, "{RESULTS_HEADER}").map_err(|e| Error::io(path, e))?;
    }

    let mut written = 0;
    let failures = execute(&jobs, &instances, config.budget, config.workers, |job, record| {
        let row = ResultRow::from_record(job.cell, job.instance_seed, job.run, record);
        write_row(&mut out, &row).map_err(|e| Error::io(path, e))?;
        written += 1;
        if written % 64 == 0 {
            out.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })?;
    out.flush().map_err(|e| Error::io(path, e))?;

    Ok(ExperimentReport {
        rows_written: written,
        rows_skipped: total - jobs.len(),
        failures,
    })
}

/// Runs every job in memory and returns the rows in canonical order.
pub fn collect_rows(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let instances = build_instances(config)?;
    let jobs = plan_jobs(config, &instances)?;
    let mut rows = Vec::with_capacity(jobs.len());
    let failures = execute(&jobs, &instances, config.budget, config.workers, |job, record| {
        rows.push(ResultRow::from_record(job.cell, job.instance_seed, job.run, record));
        Ok(())
    })?;
    if let Some((key, message)) = failures.first() {
        return Err(Error::Stats(format!("run {key:?} failed: {message}")));
    }
    Ok(rows)
}

/// Writes one row (no header) in results-file format.
pub fn write_row<W: Write>(out: &mut W, row: &ResultRow) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.serialize(row).map_err(std::io::Error::other)?;
    w.flush()
}

/// Writes a header and the rows.
pub fn write_results<W: Write>(mut out: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for row in rows {
        write_row(&mut out, row)?;
    }
    out.flush()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(csv_err)?;
    let header: Vec<&str> = header.iter().collect();
    if header.join(",") != RESULTS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("{}: unexpected results header", path.display()),
        });
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err)
}
