//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments and blank lines are ignored
//! n = 64
//! k = 2,4,6,8
//! q = 2,3,4
//! instance_seeds = 1
//! algorithms = fihc,nc,f2ns,vegas
//! c_values = 0.0001,0.001,0.01,0.1,1,10,100,500
//! nc_k_cap = reference        # or calibrate, or an integer
//! nc_calibration_runs = 30
//! runs = 100
//! budget = 100000
//! master_seed = 0
//! workers = 1
//! output = results.csv
//! ```
//!
//! Every key is optional and defaults to the value shown; unknown keys are
//! rejected. The grid is the cross product of the `n`, `k` and `q` lists.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::landscape::Quantization;
use crate::search::reference_k_cap;

pub const DEFAULT_BUDGET: u64 = 100_000;
pub const DEFAULT_RUNS: u64 = 100;
pub const DEFAULT_C_GRID: [f64; 8] = [0.0001, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 500.0];
pub const DEFAULT_K_VALUES: [usize; 4] = [2, 4, 6, 8];
pub const DEFAULT_Q_VALUES: [u32; 3] = [2, 3, 4];
pub const DEFAULT_NC_CALIBRATION_RUNS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub q: Quantization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Fihc,
    Nc,
    F2ns,
    Vegas,
}

impl AlgorithmKind {
    pub fn id(self) -> &'static str {
        match self {
            AlgorithmKind::Fihc => "fihc",
            AlgorithmKind::Nc => "nc",
            AlgorithmKind::F2ns => "f2ns",
            AlgorithmKind::Vegas => "vegas",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fihc" => Ok(AlgorithmKind::Fihc),
            "nc" => Ok(AlgorithmKind::Nc),
            "f2ns" => Ok(AlgorithmKind::F2ns),
            "vegas" => Ok(AlgorithmKind::Vegas),
            other => Err(Error::param(format!(
                "unknown algorithm {other:?} (expected fihc, nc, f2ns or vegas)"
            ))),
        }
    }
}

/// Where Netcrawler's move cap comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcCap {
    /// The measured 64-bit grid values.
    Reference,
    /// Calibrated per instance with uncapped descents.
    Calibrate {
        runs: usize,
    },
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cells: Vec<Cell>,
    pub instance_seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmKind>,
    pub c_values: Vec<f64>,
    pub nc_cap: NcCap,
    pub runs: u64,
    pub budget: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cells: grid(&[64], &DEFAULT_K_VALUES, &DEFAULT_Q_VALUES.map(Quantization::Levels)),
            instance_seeds: vec![1],
            algorithms: vec![
                AlgorithmKind::Fihc,
                AlgorithmKind::Nc,
                AlgorithmKind::F2ns,
                AlgorithmKind::Vegas,
            ],
            c_values: DEFAULT_C_GRID.to_vec(),
            nc_cap: NcCap::Reference,
            runs: DEFAULT_RUNS,
            budget: DEFAULT_BUDGET,
            master_seed: 0,
            workers: 1,
            output: PathBuf::from("results.csv"),
        }
    }
}

/// Cross product of the three parameter lists, in `n`, `k`, `q` order.
pub fn grid(ns: &[usize], ks: &[usize], qs: &[Quantization]) -> Vec<Cell> {
    ns.iter()
        .flat_map(|&n| ks.iter().flat_map(move |&k| qs.iter().map(move |&q| Cell { n, k, q })))
        .collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::param("the grid has no cells"));
        }
        for cell in &self.cells {
            if cell.n == 0 || cell.k >= cell.n {
                return Err(Error::param(format!("invalid cell n={}, k={}", cell.n, cell.k)));
            }
        }
        if self.instance_seeds.is_empty() {
            return Err(Error::param("instance_seeds is empty"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::param("algorithms is empty"));
        }
        if self.algorithms.contains(&AlgorithmKind::Vegas) && self.c_values.is_empty() {
            return Err(Error::param("vegas requested with an empty c_values list"));
        }
        if let Some(c) = self.c_values.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::param(format!("c must be finite and >= 0, got {c}")));
        }
        if self.runs == 0 {
            return Err(Error::param("runs must be >= 1"));
        }
        if self.budget == 0 {
            return Err(Error::param("budget must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be >= 1"));
        }
        if self.algorithms.contains(&AlgorithmKind::Nc) {
            match self.nc_cap {
                NcCap::Reference => {
                    if let Some(cell) = self
                        .cells
                        .iter()
                        .find(|c| c.n != 64 || reference_k_cap(c.k, c.q).is_none())
                    {
                        return Err(Error::param(format!(
                            "no reference Netcrawler cap for n={}, k={}, q={}; set nc_k_cap",
                            cell.n, cell.k, cell.q
                        )));
                    }
                }
                NcCap::Calibrate { runs: 0 } => return Err(Error::param("nc_calibration_runs must be >= 1")),
                NcCap::Fixed(0) => return Err(Error::param("nc_k_cap must be >= 1")),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses the flat key-value format; `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        let mut ns = vec![64usize];
        let mut ks = DEFAULT_K_VALUES.to_vec();
        let mut qs: Vec<Quantization> = DEFAULT_Q_VALUES.map(Quantization::Levels).to_vec();
        let mut cap_mode = String::from("reference");
        let mut calibration_runs = DEFAULT_NC_CALIBRATION_RUNS;
        let mut seen = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Config {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected 'key = value', got {line:?}")))?;
            if seen.contains(&key.to_string()) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            seen.push(key.to_string());
            let wrap = |e: Error| err(e.to_string());
            match key {
                "n" => ns = parse_list(value).map_err(wrap)?,
                "k" => ks = parse_list(value).map_err(wrap)?,
                "q" => qs = parse_list(value).map_err(wrap)?,
                "instance_seeds" => config.instance_seeds = parse_list(value).map_err(wrap)?,
                "algorithms" => config.algorithms = parse_list(value).map_err(wrap)?,
                "c_values" => config.c_values = parse_list(value).map_err(wrap)?,
                "nc_k_cap" => cap_mode = value.to_string(),
                "nc_calibration_runs" => calibration_runs = parse_one(value).map_err(wrap)?,
                "runs" => config.runs = parse_one(value).map_err(wrap)?,
                "budget" => config.budget = parse_one(value).map_err(wrap)?,
                "master_seed" => config.master_seed = parse_one(value).map_err(wrap)?,
                "workers" => config.workers = parse_one(value).map_err(wrap)?,
                "output" => {
                    if value.is_empty() {
                        return Err(err("output path is empty".into()));
                    }
                    config.output = PathBuf::from(value)
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }

        config.cells = grid(&ns, &ks, &qs);
        config.nc_cap = parse_nc_cap(&cap_mode, calibration_runs)?;
        config.validate()?;
        Ok(config)
    }
}

pub fn parse_nc_cap(mode: &str, calibration_runs: usize) -> Result<NcCap> {
    match mode {
        "reference" => Ok(NcCap::Reference),
        "calibrate" => Ok(NcCap::Calibrate { runs: calibration_runs }),
        other => other.parse().map(NcCap::Fixed).map_err(|_| {
            Error::param(format!(
                "nc_k_cap must be reference, calibrate or an integer, got {other:?}"
            ))
        }),
    }
}

fn parse_one<T: FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("invalid value {value:?}")))
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Err(Error::param("empty list"));
    }
    value.split(',').map(|item| parse_one(item.trim())).collect()
}
