//! Plot-ready tables derived from a results file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::dynamics::{dynamics_summary, find};
use super::{normalize_fitness, wilcoxon_paired, Cell, ResultRow, WilcoxonResult};
use crate::error::Result;
use crate::landscape::Instance;

/// Algorithms compared in the headline figure: the three baselines and VEGAS
/// at `c`.
pub fn is_headline(row: &ResultRow, c: f64) -> bool {
    match row.algorithm.as_str() {
        "vegas" => row.c == Some(c),
        "fihc" | "nc" | "f2ns" => true,
        _ => false,
    }
}

/// Mean normalized fitness per (cell, algorithm label).
///
/// Each instance is normalized over all headline rows it has, then the
/// z-scores are averaged over every run on every instance of the cell.
pub fn normalized_means(rows: &[ResultRow], c: f64) -> Result<BTreeMap<(Cell, String), (f64, usize)>> {
    let mut per_instance: BTreeMap<(Cell, u64), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows.iter().filter(|r| is_headline(r, c)) {
        per_instance
            .entry((row.cell(), row.instance_seed))
            .or_default()
            .push(row);
    }
    let mut sums: BTreeMap<(Cell, String), (f64, usize)> = BTreeMap::new();
    for ((cell, _), group) in per_instance {
        let values: Vec<f64> = group.iter().map(|r| r.best_norm).collect();
        let z = normalize_fitness(&values)?;
        for (row, z) in group.iter().zip(z) {
            let entry = sums.entry((cell, row.label())).or_insert((0.0, 0));
            entry.0 += z;
            entry.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(key, (sum, count))| (key, (sum / count as f64, count)))
        .collect())
}

/// Mean normalized fitness against q, per algorithm and k.
pub fn fig2_csv(rows: &[ResultRow], c: f64) -> Result<String> {
    let mut out = String::from("n,k,q,algorithm,mean_normalized_fitness,runs\n");
    for ((cell, label), (mean, runs)) in normalized_means(rows, c)? {
        writeln!(out, "{},{},{},{label},{mean},{runs}", cell.n, cell.k, cell.q).unwrap();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub cell: Cell,
    pub first: String,
    pub second: String,
    pub pairs: usize,
    pub test: WilcoxonResult,
}

/// Paired Wilcoxon tests between every two headline algorithms of each cell.
///
/// Runs are paired by (instance seed, run index) and compared on their
/// integer fitness totals. Pairs missing on either side are left out.
pub fn comparisons(rows: &[ResultRow], c: f64, alpha: f64) -> Result<Vec<Comparison>> {
    let mut by_label: BTreeMap<(Cell, String), BTreeMap<(u64, u64), f64>> = BTreeMap::new();
    for row in rows.iter().filter(|r| is_headline(r, c)) {
        by_label
            .entry((row.cell(), row.label()))
            .or_default()
            .insert((row.instance_seed, row.run), row.best_total as f64);
    }
    let mut cells: Vec<Cell> = by_label.keys().map(|(cell, _)| *cell).collect();
    cells.dedup();
    let order = |label: &str| match label {
        "fihc" => 0,
        "nc" => 1,
        "f2ns" => 2,
        _ => 3,
    };
    let mut out = Vec::new();
    for cell in cells {
        let mut labels: Vec<&String> = by_label.keys().filter(|(c, _)| *c == cell).map(|(_, l)| l).collect();
        labels.sort_by_key(|l| order(l));
        for (i, first) in labels.iter().enumerate() {
            for second in &labels[i + 1..] {
                let a = &by_label[&(cell, (*first).clone())];
                let b = &by_label[&(cell, (*second).clone())];
                let (x, y): (Vec<f64>, Vec<f64>) =
                    a.iter().filter_map(|(key, va)| b.get(key).map(|vb| (*va, *vb))).unzip();
                out.push(Comparison {
                    cell,
                    first: (*first).clone(),
                    second: (*second).clone(),
                    pairs: x.len(),
                    test: wilcoxon_paired(&x, &y, alpha)?,
                });
            }
        }
    }
    Ok(out)
}

pub fn comparisons_csv(rows: &[ResultRow], c: f64, alpha: f64) -> Result<String> {
    let mut out = String::from("n,k,q,first,second,pairs,w_plus,p_value,direction\n");
    for cmp in comparisons(rows, c, alpha)? {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cmp.cell.n,
            cmp.cell.k,
            cmp.cell.q,
            cmp.first,
            cmp.second,
            cmp.pairs,
            cmp.test.statistic,
            cmp.test.p_value,
            cmp.test.direction.symbol()
        )
        .unwrap();
    }
    Ok(out)
}

/// Per-configuration dynamics aggregates.
pub fn dynamics_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("n,k,q,algorithm,c,runs,mean_plateaus,mean_plateau_size\n");
    for s in dynamics_summary(rows) {
        let c = s.c.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{c},{},{},{}",
            s.cell.n, s.cell.k, s.cell.q, s.algorithm, s.runs, s.mean_plateaus, s.mean_plateau_size
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralityPoint {
    pub cell: Cell,
    pub neutral_degree: f64,
    pub mean_plateau_size: f64,
}

/// Pairs VEGAS's mean plateau size with the sampled neutral degree of every
/// cell, averaging the degree over the instances present in `rows`.
pub fn neutrality_points(rows: &[ResultRow], c: f64, samples: usize, seed: u64) -> Result<Vec<NeutralityPoint>> {
    let vegas: Vec<ResultRow> = rows
        .iter()
        .filter(|r| r.algorithm == "vegas" && r.c == Some(c))
        .cloned()
        .collect();
    let summaries = dynamics_summary(&vegas);
    let mut instances: BTreeMap<Cell, Vec<u64>> = BTreeMap::new();
    for row in &vegas {
        let seeds = instances.entry(row.cell()).or_default();
        if !seeds.contains(&row.instance_seed) {
            seeds.push(row.instance_seed);
        }
    }
    let mut points = Vec::new();
    for (cell, seeds) in instances {
        let mut degree = 0.0;
        for &s in &seeds {
            let inst = Instance::generate(cell.n, cell.k, cell.q, s)?;
            degree += inst.sample_neutral_degree(samples, seed)?.mean;
        }
        let size = find(&summaries, cell, "vegas", Some(c)).map_or(0.0, |s| s.mean_plateau_size);
        points.push(NeutralityPoint {
            cell,
            neutral_degree: degree / seeds.len() as f64,
            mean_plateau_size: size,
        });
    }
    points.sort_by(|a, b| a.neutral_degree.total_cmp(&b.neutral_degree));
    Ok(points)
}

pub fn fig3_csv(rows: &[ResultRow], c: f64, samples: usize, seed: u64) -> Result<String> {
    let mut out = String::from("n,k,q,neutral_degree,mean_plateau_size\n");
    for p in neutrality_points(rows, c, samples, seed)? {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.cell.n, p.cell.k, p.cell.q, p.neutral_degree, p.mean_plateau_size
        )
        .unwrap();
    }
    Ok(out)
}

/// Plateau count and size of every VEGAS configuration, against C.
pub fn fig4_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("n,k,q,c,mean_plateaus,mean_plateau_size\n");
    let mut summaries: Vec<_> = dynamics_summary(rows)
        .into_iter()
        .filter(|s| s.algorithm == "vegas")
        .collect();
    summaries.sort_by(|a, b| {
        a.cell
            .cmp(&b.cell)
            .then(a.c.unwrap_or(0.0).total_cmp(&b.c.unwrap_or(0.0)))
    });
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.cell.n,
            s.cell.k,
            s.cell.q,
            s.c.unwrap_or(0.0),
            s.mean_plateaus,
            s.mean_plateau_size
        )
        .unwrap();
    }
    out
}

/// Plateau count and size against q for an exploring and an exploiting VEGAS
/// and for F2NS.
pub fn fig5_csv(rows: &[ResultRow], exploring_c: f64, exploiting_c: f64) -> String {
    let mut out = String::from("n,k,q,algorithm,mean_plateaus,mean_plateau_size\n");
    let summaries = dynamics_summary(rows);
    let mut cells: Vec<Cell> = summaries.iter().map(|s| s.cell).collect();
    cells.sort();
    cells.dedup();
    for cell in cells {
        for (algorithm, c) in [
            ("vegas", Some(exploring_c)),
            ("vegas", Some(exploiting_c)),
            ("f2ns", None),
        ] {
            if let Some(s) = find(&summaries, cell, algorithm, c) {
                let label = match c {
                    Some(c) => format!("vegas(c={c})"),
                    None => algorithm.to_string(),
                };
                writeln!(
                    out,
                    "{},{},{},{label},{},{}",
                    cell.n, cell.k, cell.q, s.mean_plateaus, s.mean_plateau_size
                )
                .unwrap();
            }
        }
    }
    out
}
