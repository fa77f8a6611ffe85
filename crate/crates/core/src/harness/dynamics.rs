//! Search-dynamics aggregates: how many plateaus a configuration visits per
//! run and how many solutions it evaluates on each.

use std::collections::BTreeMap;

use super::{Cell, ResultRow};
use crate::search::RunRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSummary {
    pub cell: Cell,
    pub algorithm: String,
    pub c: Option<f64>,
    pub runs: usize,
    /// Mean number of plateau episodes per run.
    pub mean_plateaus: f64,
    /// Mean over runs of the per-run mean plateau size.
    pub mean_plateau_size: f64,
}

type GroupKey = (Cell, String, Option<u64>);

/// Aggregates rows per (cell, algorithm, C), ordered by that key.
pub fn dynamics_summary(rows: &[ResultRow]) -> Vec<DynamicsSummary> {
    let mut groups: BTreeMap<GroupKey, Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.cell(), row.algorithm.clone(), row.c.map(f64::to_bits)))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|((cell, algorithm, c_bits), members)| {
            let runs = members.len();
            let plateaus: f64 = members.iter().map(|r| r.plateaus as f64).sum();
            let sizes: f64 = members.iter().map(|r| r.mean_plateau_size).sum();
            DynamicsSummary {
                cell,
                algorithm,
                c: c_bits.map(f64::from_bits),
                runs,
                mean_plateaus: plateaus / runs as f64,
                mean_plateau_size: sizes / runs as f64,
            }
        })
        .collect()
}

/// Finds the summary of one configuration.
pub fn find<'a>(
    summaries: &'a [DynamicsSummary],
    cell: Cell,
    algorithm: &str,
    c: Option<f64>,
) -> Option<&'a DynamicsSummary> {
    summaries
        .iter()
        .find(|s| s.cell == cell && s.algorithm == algorithm && s.c == c)
}

/// Running mean of the two dynamics statistics, fed one run at a time.
#[derive(Debug, Clone, Copy, Default)]
pub struct DynamicsAccumulator {
    runs: u64,
    mean_plateaus: f64,
    mean_plateau_size: f64,
}

impl DynamicsAccumulator {
    pub fn push(&mut self, plateaus: f64, mean_plateau_size: f64) {
        self.runs += 1;
        let n = self.runs as f64;
        self.mean_plateaus += (plateaus - self.mean_plateaus) / n;
        self.mean_plateau_size += (mean_plateau_size - self.mean_plateau_size) / n;
    }

    pub fn push_record(&mut self, record: &RunRecord) {
        self.push(record.plateau_count() as f64, record.mean_plateau_size());
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn mean_plateaus(&self) -> f64 {
        self.mean_plateaus
    }

    pub fn mean_plateau_size(&self) -> f64 {
        self.mean_plateau_size
    }
}
