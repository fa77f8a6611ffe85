//! Normalized fitness and the paired Wilcoxon signed-rank test.

use crate::error::{Error, Result};

/// Z-scores `(f - mean) / sd` with the population standard deviation of all
/// `values`. Every score is 0 when the values are all equal.
pub fn normalize_fitness(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Stats("cannot normalize an empty cell".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Outcome of a two-sided test at a given significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    FirstGreater,
    SecondGreater,
    NoDifference,
}

impl Direction {
    /// `>`, `<` or `=`, read as "first vs second".
    pub fn symbol(self) -> char {
        match self {
            Direction::FirstGreater => '>',
            Direction::SecondGreater => '<',
            Direction::NoDifference => '=',
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::FirstGreater => Direction::SecondGreater,
            Direction::SecondGreater => Direction::FirstGreater,
            Direction::NoDifference => Direction::NoDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences (W+).
    pub statistic: f64,
    pub p_value: f64,
    pub direction: Direction,
    /// Number of nonzero differences the test used.
    pub nonzero: usize,
    pub exact: bool,
}

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

/// Signed ranks of the nonzero differences `x - y`: zero differences are
/// dropped and tied absolute values share their midrank. Ranks are returned
/// doubled so that midranks stay integral.
#[derive(Debug, Clone)]
pub struct SignedRanks {
    pub doubled_ranks: Vec<u64>,
    pub positive: Vec<bool>,
    /// Sizes of the tie groups among absolute differences.
    pub tie_sizes: Vec<usize>,
}

impl SignedRanks {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Stats(format!(
                "paired samples differ in length: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        let mut diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
        if diffs.iter().any(|d| d.is_nan()) {
            return Err(Error::Stats("NaN in paired samples".into()));
        }
        diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

        let mut doubled_ranks = Vec::with_capacity(diffs.len());
        let mut tie_sizes = Vec::new();
        let mut i = 0;
        while i < diffs.len() {
            let mut j = i + 1;
            while j < diffs.len() && diffs[j].abs() == diffs[i].abs() {
                j += 1;
            }
            // Ranks i+1..=j share the midrank (i + 1 + j) / 2.
            let doubled = (i + 1 + j) as u64;
            doubled_ranks.extend(std::iter::repeat_n(doubled, j - i));
            tie_sizes.push(j - i);
            i = j;
        }
        let positive = diffs.iter().map(|d| *d > 0.0).collect();
        Ok(Self {
            doubled_ranks,
            positive,
            tie_sizes,
        })
    }

    pub fn len(&self) -> usize {
        self.doubled_ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doubled_ranks.is_empty()
    }

    /// 2 * W+.
    pub fn doubled_w_plus(&self) -> u64 {
        self.doubled_ranks
            .iter()
            .zip(&self.positive)
            .filter(|(_, &p)| p)
            .map(|(r, _)| r)
            .sum()
    }

    fn doubled_total(&self) -> u64 {
        self.doubled_ranks.iter().sum()
    }
}

/// Paired two-sided Wilcoxon signed-rank test on `x - y`.
///
/// Uses exact enumeration of the null distribution up to [`EXACT_LIMIT`]
/// nonzero differences and the tie-corrected normal approximation with
/// continuity correction above that.
pub fn wilcoxon_paired(x: &[f64], y: &[f64], alpha: f64) -> Result<WilcoxonResult> {
    let ranks = SignedRanks::new(x, y)?;
    if ranks.len() <= EXACT_LIMIT {
        Ok(wilcoxon_exact(&ranks, alpha))
    } else {
        Ok(wilcoxon_normal(&ranks, alpha))
    }
}

fn direction(ranks: &SignedRanks, p_value: f64, alpha: f64) -> Direction {
    let w2 = ranks.doubled_w_plus();
    let w2_minus = ranks.doubled_total() - w2;
    if p_value >= alpha || w2 == w2_minus {
        Direction::NoDifference
    } else if w2 > w2_minus {
        Direction::FirstGreater
    } else {
        Direction::SecondGreater
    }
}

fn no_difference() -> WilcoxonResult {
    WilcoxonResult {
        statistic: 0.0,
        p_value: 1.0,
        direction: Direction::NoDifference,
        nonzero: 0,
        exact: true,
    }
}

/// Exact p-value: the sign of every nonzero difference is equally likely to
/// be positive or negative under the null, so the distribution of 2W+ is the
/// subset-sum distribution of the doubled ranks.
pub fn wilcoxon_exact(ranks: &SignedRanks, alpha: f64) -> WilcoxonResult {
    if ranks.is_empty() {
        return no_difference();
    }
    let total = ranks.doubled_total() as usize;
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &ranks.doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w2 = ranks.doubled_w_plus() as usize;
    let lower: f64 = counts[..=w2].iter().sum();
    let upper: f64 = counts[w2..].iter().sum();
    let all = 2f64.powi(ranks.len() as i32);
    let p_value = (2.0 * lower.min(upper) / all).min(1.0);
    WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        p_value,
        direction: direction(ranks, p_value, alpha),
        nonzero: ranks.len(),
        exact: true,
    }
}

/// Normal approximation with tie-corrected variance and a continuity
/// correction of 1/2.
pub fn wilcoxon_normal(ranks: &SignedRanks, alpha: f64) -> WilcoxonResult {
    if ranks.is_empty() {
        return no_difference();
    }
    let m = ranks.len() as f64;
    let w_plus = ranks.doubled_w_plus() as f64 / 2.0;
    let mean = m * (m + 1.0) / 4.0;
    let tie_term: f64 = ranks
        .tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    // The correction moves the statistic half a unit towards the mean and may
    // overshoot it, as in the usual reference implementations.
    let offset = (w_plus - mean).abs();
    let distance = if offset == 0.0 { 0.0 } else { (offset - 0.5).abs() };
    let p_value = if var > 0.0 {
        let z = distance / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    } else {
        1.0
    };
    WilcoxonResult {
        statistic: w_plus,
        p_value,
        direction: direction(ranks, p_value, alpha),
        nonzero: ranks.len(),
        exact: false,
    }
}
