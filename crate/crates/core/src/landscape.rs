//! NK and NKq fitness landscapes.
//!
//! An instance has `n` components. Component `i` reads its own bit plus `k`
//! linked bits and looks the resulting `(k + 1)`-bit index up in its table.
//! Fitness is kept as the exact integer sum of the looked-up values, so two
//! solutions are neutral neighbours exactly when their totals are equal.
//!
//! Table index packing: the component's own bit is the most significant
//! position, followed by the linked bits in links-row order, so the last
//! link lands in bit 0. For `k = 2` and links `[a, b]` the index of component
//! `i` is `x[i] << 2 | x[a] << 1 | x[b]`.
//!
//! Quantized (NKq) instances draw table values uniformly from `[0, q)`.
//! Continuous (classic NK) instances draw 32-bit values, where `v` stands for
//! the real `v / 2^32`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::bitstring::BitString;
use crate::error::{Error, Result};
use crate::rng::{child_rng, rng_from_seed};

/// Largest total number of table entries an instance may hold.
pub const MAX_TABLE_ENTRIES: usize = 1 << 28;

/// Quantization level of the component values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantization {
    /// Values in `[0, q)`, `q >= 2`.
    Levels(u32),
    /// 32-bit values, the classic continuous NK model.
    Continuous,
}

impl Quantization {
    /// Exclusive upper bound of a single table value.
    pub fn value_bound(self) -> u64 {
        match self {
            Quantization::Levels(q) => u64::from(q),
            Quantization::Continuous => 1 << 32,
        }
    }

    /// Normalization constant per component.
    pub fn component_scale(self) -> u64 {
        match self {
            Quantization::Levels(q) => u64::from(q) - 1,
            Quantization::Continuous => 1 << 32,
        }
    }
}

impl fmt::Display for Quantization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantization::Levels(q) => write!(f, "{q}"),
            Quantization::Continuous => f.write_str("continuous"),
        }
    }
}

impl FromStr for Quantization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "continuous" {
            return Ok(Quantization::Continuous);
        }
        let q: u32 = s
            .parse()
            .map_err(|_| Error::param(format!("q must be an integer >= 2 or 'continuous', got {s:?}")))?;
        if q < 2 {
            return Err(Error::param(format!("q must be >= 2, got {q}")));
        }
        Ok(Quantization::Levels(q))
    }
}

/// Exact fitness of a solution.
///
/// Ordering and equality look at `total` first; totals from the same instance
/// share `denom`, so comparisons are exact integer comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerFitness {
    pub total: u64,
    pub denom: u64,
}

impl IntegerFitness {
    /// Fitness scaled into `[0, 1]`.
    pub fn normalized(self) -> f64 {
        self.total as f64 / self.denom as f64
    }
}

/// Anything the search algorithms can climb on.
///
/// The search code only ever evaluates full solutions (fresh random starts)
/// and one-bit flips, so that is all this trait asks for.
pub trait FitnessFunction {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn evaluate(&self, solution: &BitString) -> IntegerFitness;

    /// Fitness of `solution` with `bit` flipped, given that `current` is the
    /// fitness of `solution` itself.
    fn evaluate_flip(&self, solution: &BitString, current: IntegerFitness, bit: usize) -> IntegerFitness;
}

/// An NK or NKq landscape.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    k: usize,
    q: Quantization,
    seed: u64,
    // n rows of k indices.
    links: Vec<u32>,
    // n rows of 2^(k+1) values.
    tables: Vec<u32>,
    // For every bit j: the (row, index mask) pairs whose table index depends on j.
    dependents: Vec<Vec<(u32, u32)>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.k == other.k
            && self.q == other.q
            && self.seed == other.seed
            && self.links == other.links
            && self.tables == other.tables
    }
}

impl Eq for Instance {}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be >= 1"));
    }
    if n > u32::MAX as usize {
        return Err(Error::param("n does not fit in 32 bits"));
    }
    if k >= n {
        return Err(Error::param(format!("k must lie in [0, n-1], got k={k} with n={n}")));
    }
    let entries = 1usize
        .checked_shl(k as u32 + 1)
        .and_then(|row| row.checked_mul(n))
        .filter(|&total| k < 31 && total <= MAX_TABLE_ENTRIES);
    if entries.is_none() {
        return Err(Error::param(format!(
            "n={n}, k={k} needs more than {MAX_TABLE_ENTRIES} table entries"
        )));
    }
    Ok(())
}

impl Instance {
    /// Generates the instance determined by `(n, k, q, seed)`.
    ///
    /// Links of row `i` are `k` distinct positions sampled without replacement
    /// from every position except `i`; table values are i.i.d. uniform.
    pub fn generate(n: usize, k: usize, q: Quantization, seed: u64) -> Result<Self> {
        check_shape(n, k)?;
        if let Quantization::Levels(levels) = q {
            if levels < 2 {
                return Err(Error::param(format!("q must be >= 2, got {levels}")));
            }
        }

        let mut link_rng = child_rng(seed, "links", 0);
        let mut links = Vec::with_capacity(n * k);
        for i in 0..n {
            for j in sample(&mut link_rng, n - 1, k).iter() {
                let j = if j >= i { j + 1 } else { j };
                links.push(j as u32);
            }
        }

        let mut table_rng = child_rng(seed, "tables", 0);
        let entries = n << (k + 1);
        let tables: Vec<u32> = match q {
            Quantization::Levels(levels) => (0..entries).map(|_| table_rng.gen_range(0..levels)).collect(),
            Quantization::Continuous => (0..entries).map(|_| table_rng.gen()).collect(),
        };

        Self::from_parts(n, k, q, seed, links, tables)
    }

    /// Assembles an instance from explicit links and tables, checking every
    /// structural invariant. `links` and `tables` are row-major.
    pub fn from_parts(
        n: usize,
        k: usize,
        q: Quantization,
        seed: u64,
        links: Vec<u32>,
        tables: Vec<u32>,
    ) -> Result<Self> {
        check_shape(n, k)?;
        if links.len() != n * k {
            return Err(Error::param(format!(
                "expected {} link entries, got {}",
                n * k,
                links.len()
            )));
        }
        let row_len = 1usize << (k + 1);
        if tables.len() != n * row_len {
            return Err(Error::param(format!(
                "expected {} table entries, got {}",
                n * row_len,
                tables.len()
            )));
        }
        for i in 0..n {
            let row = &links[i * k..(i + 1) * k];
            for (m, &j) in row.iter().enumerate() {
                if j as usize >= n {
                    return Err(Error::param(format!("row {i}: link {j} out of range")));
                }
                if j as usize == i {
                    return Err(Error::param(format!("row {i}: links its own index")));
                }
                if row[..m].contains(&j) {
                    return Err(Error::param(format!("row {i}: duplicate link {j}")));
                }
            }
        }
        let bound = q.value_bound();
        if let Some(pos) = tables.iter().position(|&v| u64::from(v) >= bound) {
            return Err(Error::param(format!(
                "row {}: table value {} outside [0, {bound})",
                pos / row_len,
                tables[pos]
            )));
        }

        let mut dependents: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for (i, deps) in dependents.iter_mut().enumerate() {
            deps.push((i as u32, 1 << k));
        }
        for i in 0..n {
            for m in 0..k {
                let j = links[i * k + m] as usize;
                dependents[j].push((i as u32, 1 << (k - 1 - m)));
            }
        }

        Ok(Self {
            n,
            k,
            q,
            seed,
            links,
            tables,
            dependents,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> Quantization {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn links(&self, row: usize) -> &[u32] {
        &self.links[row * self.k..(row + 1) * self.k]
    }

    pub fn table(&self, row: usize) -> &[u32] {
        let len = 1 << (self.k + 1);
        &self.tables[row * len..(row + 1) * len]
    }

    /// Normalization constant: `n (q - 1)` or `n 2^32`.
    pub fn denom(&self) -> u64 {
        self.n as u64 * self.q.component_scale()
    }

    /// Rows whose table index changes when `bit` flips, including `bit` itself.
    pub fn dependents(&self, bit: usize) -> impl Iterator<Item = usize> + '_ {
        self.dependents[bit].iter().map(|&(row, _)| row as usize)
    }

    #[inline]
    fn component_index(&self, row: usize, solution: &BitString) -> usize {
        let mut idx = solution.get(row) as usize;
        for &j in &self.links[row * self.k..(row + 1) * self.k] {
            idx = (idx << 1) | solution.get(j as usize) as usize;
        }
        idx
    }

    #[inline]
    fn value(&self, row: usize, idx: usize) -> u64 {
        u64::from(self.tables[(row << (self.k + 1)) + idx])
    }

    fn fitness(&self, total: u64) -> IntegerFitness {
        IntegerFitness {
            total,
            denom: self.denom(),
        }
    }

    fn check_len(&self, solution: &BitString) -> Result<()> {
        if solution.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: solution.len(),
            });
        }
        Ok(())
    }

    fn total_unchecked(&self, solution: &BitString) -> u64 {
        (0..self.n)
            .map(|row| self.value(row, self.component_index(row, solution)))
            .sum()
    }

    fn flip_total_unchecked(&self, solution: &BitString, total: u64, bit: usize) -> u64 {
        let mut removed = 0u64;
        let mut added = 0u64;
        for &(row, mask) in &self.dependents[bit] {
            let row = row as usize;
            let idx = self.component_index(row, solution);
            removed += self.value(row, idx);
            added += self.value(row, idx ^ mask as usize);
        }
        total - removed + added
    }

    /// Sums every component value of `solution`.
    pub fn full_evaluate(&self, solution: &BitString) -> Result<IntegerFitness> {
        self.check_len(solution)?;
        Ok(self.fitness(self.total_unchecked(solution)))
    }

    /// Fitness of `solution` with `bit` flipped, re-reading only the
    /// components that depend on `bit`. `fitness` must be the fitness of
    /// `solution`.
    pub fn delta_evaluate(&self, solution: &BitString, fitness: IntegerFitness, bit: usize) -> Result<IntegerFitness> {
        self.check_len(solution)?;
        if bit >= self.n {
            return Err(Error::BitOutOfRange {
                index: bit,
                len: self.n,
            });
        }
        Ok(self.fitness(self.flip_total_unchecked(solution, fitness.total, bit)))
    }

    /// Number of one-bit flips that leave the total unchanged.
    pub fn neutral_degree(&self, solution: &BitString) -> Result<usize> {
        self.check_len(solution)?;
        let total = self.total_unchecked(solution);
        Ok((0..self.n)
            .filter(|&bit| self.flip_total_unchecked(solution, total, bit) == total)
            .count())
    }

    /// Mean and population standard deviation of the neutral degree over
    /// `samples` uniform random solutions.
    pub fn sample_neutral_degree(&self, samples: usize, seed: u64) -> Result<NeutralDegreeStats> {
        if samples == 0 {
            return Err(Error::param("samples must be >= 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let s = BitString::random(self.n, &mut rng);
            let d = self.neutral_degree(&s)? as f64;
            sum += d;
            sum_sq += d * d;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sum_sq / m - mean * mean).max(0.0);
        Ok(NeutralDegreeStats {
            mean,
            stddev: var.sqrt(),
            samples,
        })
    }

    /// Writes the line-based text form.
    pub fn write_to<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "NKQ 1")?;
        writeln!(sink, "n {}", self.n)?;
        writeln!(sink, "k {}", self.k)?;
        writeln!(sink, "q {}", self.q)?;
        writeln!(sink, "seed {}", self.seed)?;
        for i in 0..self.n {
            write!(sink, "L {i}")?;
            for j in self.links(i) {
                write!(sink, " {j}")?;
            }
            writeln!(sink)?;
        }
        for i in 0..self.n {
            write!(sink, "T {i}")?;
            for v in self.table(i) {
                write!(sink, " {v}")?;
            }
            writeln!(sink)?;
        }
        sink.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    /// Parses the text form written by [`Instance::write_to`]. Any deviation
    /// from that exact layout is an error naming the offending line.
    pub fn read_from<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| Error::parse(0, format!("unreadable input: {e}")))?;
        parse_instance(&text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }
}

impl FitnessFunction for Instance {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn evaluate(&self, solution: &BitString) -> IntegerFitness {
        debug_assert_eq!(solution.len(), self.n);
        self.fitness(self.total_unchecked(solution))
    }

    #[inline]
    fn evaluate_flip(&self, solution: &BitString, current: IntegerFitness, bit: usize) -> IntegerFitness {
        debug_assert_eq!(solution.len(), self.n);
        self.fitness(self.flip_total_unchecked(solution, current.total, bit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralDegreeStats {
    pub mean: f64,
    pub stddev: f64,
    pub samples: usize,
}

/// Analytic estimate of the mean neutral degree of an NKq instance.
///
/// Treats a flip as re-drawing exactly `k + 1` components (its own plus `k`
/// linked ones on average) and returns `n * P(B = B')`, where `B` and `B'`
/// are independent sums of `k + 1` uniform values on `{0, ..., q - 1}`. The
/// true number of affected components is one plus a binomial count, so this
/// is an approximation; it is exact for `k = 0`.
pub fn expected_neutral_degree(n: usize, k: usize, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::param(format!("q must be >= 2, got {q}")));
    }
    let q = q as usize;
    let mut dist = vec![1.0f64];
    for _ in 0..=k {
        let mut next = vec![0.0; dist.len() + q - 1];
        for (s, &p) in dist.iter().enumerate() {
            for v in 0..q {
                next[s + v] += p / q as f64;
            }
        }
        dist = next;
    }
    Ok(n as f64 * dist.iter().map(|p| p * p).sum::<f64>())
}

fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    match lines.pop() {
        Some("") => {}
        _ => return Err(Error::parse(lines.len() + 1, "missing final newline")),
    }
    let mut cursor = LineCursor { lines: &lines, pos: 0 };

    let (no, header) = cursor.next()?;
    if header != "NKQ 1" {
        return Err(Error::parse(no, format!("expected header 'NKQ 1', got {header:?}")));
    }
    let n: usize = cursor.keyed("n")?;
    let k: usize = cursor.keyed("k")?;
    let (no, q_text) = cursor.keyed_raw("q")?;
    let q: Quantization = q_text.parse().map_err(|e: Error| Error::parse(no, e.to_string()))?;
    let seed: u64 = cursor.keyed("seed")?;
    check_shape(n, k).map_err(|e| Error::parse(cursor.pos, e.to_string()))?;

    let mut links = Vec::with_capacity(n * k);
    for i in 0..n {
        let (no, row) = cursor.row('L', i, k)?;
        for (m, &j) in row.iter().enumerate() {
            if j as usize >= n {
                return Err(Error::parse(no, format!("link {j} out of range [0, {n})")));
            }
            if j as usize == i {
                return Err(Error::parse(no, format!("row {i} links its own index")));
            }
            if row[..m].contains(&j) {
                return Err(Error::parse(no, format!("duplicate link {j}")));
            }
        }
        links.extend(row);
    }
    let row_len = 1usize << (k + 1);
    let bound = q.value_bound();
    let mut tables = Vec::with_capacity(n * row_len);
    for i in 0..n {
        let (no, row) = cursor.row('T', i, row_len)?;
        if let Some(v) = row.iter().find(|&&v| u64::from(v) >= bound) {
            return Err(Error::parse(no, format!("table value {v} outside [0, {bound})")));
        }
        tables.extend(row);
    }
    if cursor.pos < lines.len() {
        return Err(Error::parse(cursor.pos + 1, "unexpected trailing line"));
    }
    Instance::from_parts(n, k, q, seed, links, tables).map_err(|e| Error::parse(cursor.pos, e.to_string()))
}

struct LineCursor<'a> {
    lines: &'a [&'a str],
    pos: usize,
}

impl<'a> LineCursor<'a> {
    /// Returns the 1-based line number and its text.
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.pos + 1, "unexpected end of input"))?;
        self.pos += 1;
        Ok((self.pos, line))
    }

    fn keyed_raw(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (no, line) = self.next()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key && !v.is_empty() && !v.contains(' ') => Ok((no, v)),
            _ => Err(Error::parse(no, format!("expected '{key} <value>', got {line:?}"))),
        }
    }

    fn keyed<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (no, v) = self.keyed_raw(key)?;
        if v.starts_with('+') {
            return Err(Error::parse(no, format!("invalid {key} value {v:?}")));
        }
        v.parse()
            .map_err(|_| Error::parse(no, format!("invalid {key} value {v:?}")))
    }

    fn row(&mut self, tag: char, index: usize, expected: usize) -> Result<(usize, Vec<u32>)> {
        let (no, line) = self.next()?;
        let mut tokens = line.split(' ');
        if tokens.next() != Some(tag.encode_utf8(&mut [0; 4])) {
            return Err(Error::parse(no, format!("expected a '{tag}' row")));
        }
        let parse = |t: &str| -> Result<u32> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::parse(no, format!("invalid number {t:?}")));
            }
            t.parse().map_err(|_| Error::parse(no, format!("invalid number {t:?}")))
        };
        let got_index = tokens
            .next()
            .ok_or_else(|| Error::parse(no, "missing row index"))
            .and_then(parse)?;
        if got_index as usize != index {
            return Err(Error::parse(no, format!("expected row {index}, got {got_index}")));
        }
        let values = tokens.map(parse).collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(Error::parse(
                no,
                format!("'{tag}' row {index} has {} values, expected {expected}", values.len()),
            ));
        }
        Ok((no, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(n: usize, k: usize) -> Instance {
        let links = (0..n)
            .flat_map(|i| (1..=k).map(move |d| ((i + d) % n) as u32))
            .collect();
        Instance::from_parts(n, k, Quantization::Levels(2), 0, links, vec![0; n << (k + 1)]).unwrap()
    }

    /// Bit-by-bit table walk written independently of the packed evaluator.
    fn walk_total(inst: &Instance, bits: &[bool]) -> u64 {
        let mut total = 0;
        for i in 0..inst.n() {
            let mut inputs = vec![bits[i]];
            inputs.extend(inst.links(i).iter().map(|&j| bits[j as usize]));
            let mut idx = 0usize;
            for (pos, &b) in inputs.iter().enumerate() {
                if b {
                    idx += 1 << (inputs.len() - 1 - pos);
                }
            }
            total += u64::from(inst.table(i)[idx]);
        }
        total
    }

    fn all_solutions(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..1 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
    }

    #[test]
    fn generated_shape() {
        let inst = Instance::generate(64, 6, Quantization::Levels(3), 42).unwrap();
        assert_eq!(inst.n(), 64);
        for i in 0..64 {
            let row = inst.links(i);
            assert_eq!(row.len(), 6);
            assert!(!row.contains(&(i as u32)));
            let mut sorted = row.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 6);
            assert_eq!(inst.table(i).len(), 128);
            assert!(inst.table(i).iter().all(|&v| v < 3));
        }
        assert_eq!(inst, Instance::generate(64, 6, Quantization::Levels(3), 42).unwrap());
        assert_ne!(inst, Instance::generate(64, 6, Quantization::Levels(3), 43).unwrap());
    }

    #[test]
    fn smallest_instance() {
        let inst = Instance::generate(1, 0, Quantization::Levels(2), 0).unwrap();
        assert!(inst.links(0).is_empty());
        assert_eq!(inst.table(0).len(), 2);
        assert!(inst.table(0).iter().all(|&v| v < 2));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Instance::generate(0, 0, Quantization::Levels(2), 0).is_err());
        assert!(Instance::generate(4, 4, Quantization::Levels(2), 0).is_err());
        assert!(Instance::generate(4, 1, Quantization::Levels(1), 0).is_err());
        assert!(Instance::generate(64, 40, Quantization::Levels(2), 0).is_err());
        assert!("1".parse::<Quantization>().is_err());
        assert!("x".parse::<Quantization>().is_err());
        assert_eq!("continuous".parse::<Quantization>().unwrap(), Quantization::Continuous);
    }

    #[test]
    fn direct_lookup() {
        let inst = Instance::from_parts(1, 0, Quantization::Levels(2), 0, vec![], vec![0, 1]).unwrap();
        assert_eq!(inst.full_evaluate(&BitString::parse("0").unwrap()).unwrap().total, 0);
        assert_eq!(inst.full_evaluate(&BitString::parse("1").unwrap()).unwrap().total, 1);
        assert!(inst.full_evaluate(&BitString::parse("10").unwrap()).is_err());
    }

    #[test]
    fn constant_landscape_is_flat() {
        let inst = constant(6, 2);
        for bits in all_solutions(6) {
            let s = BitString::from_bools(&bits);
            assert_eq!(inst.full_evaluate(&s).unwrap().total, 0);
            assert_eq!(inst.neutral_degree(&s).unwrap(), 6);
        }
        let stats = inst.sample_neutral_degree(100, 1).unwrap();
        assert_eq!(stats.mean, 6.0);
        assert_eq!(stats.stddev, 0.0);
    }

    #[test]
    fn exhaustive_small_instance_matches_table_walk() {
        for seed in 0..5 {
            let inst = Instance::generate(4, 1, Quantization::Levels(2), seed).unwrap();
            for bits in all_solutions(4) {
                let s = BitString::from_bools(&bits);
                let fit = inst.full_evaluate(&s).unwrap();
                assert_eq!(fit.total, walk_total(&inst, &bits));
                assert_eq!(fit.denom, 4);

                let brute = (0..4)
                    .filter(|&b| {
                        let mut flipped = bits.clone();
                        flipped[b] = !flipped[b];
                        walk_total(&inst, &flipped) == fit.total
                    })
                    .count();
                assert_eq!(inst.neutral_degree(&s).unwrap(), brute);
            }
        }
    }

    #[test]
    fn continuous_neutral_degree_matches_brute_force() {
        let inst = Instance::generate(32, 3, Quantization::Continuous, 9).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            let s = BitString::random(32, &mut rng);
            let f = inst.full_evaluate(&s).unwrap();
            let brute = (0..32)
                .filter(|&b| inst.full_evaluate(&s.flipped(b)).unwrap() == f)
                .count();
            assert_eq!(inst.neutral_degree(&s).unwrap(), brute);
            assert_eq!(brute, 0);
        }
    }

    #[test]
    fn delta_with_k0_touches_only_own_component() {
        let inst = Instance::generate(8, 0, Quantization::Levels(4), 3).unwrap();
        for bit in 0..8 {
            assert_eq!(inst.dependents(bit).collect::<Vec<_>>(), vec![bit]);
        }
    }

    #[test]
    fn delta_flip_twice_is_identity() {
        let inst = Instance::generate(20, 3, Quantization::Levels(3), 5).unwrap();
        let mut rng = rng_from_seed(6);
        let s = BitString::random(20, &mut rng);
        let f = inst.full_evaluate(&s).unwrap();
        for bit in 0..20 {
            let once = inst.delta_evaluate(&s, f, bit).unwrap();
            let t = s.flipped(bit);
            assert_eq!(inst.delta_evaluate(&t, once, bit).unwrap(), f);
        }
        assert!(matches!(
            inst.delta_evaluate(&s, f, 20),
            Err(Error::BitOutOfRange { index: 20, len: 20 })
        ));
    }

    #[test]
    fn analytic_degree_hand_values() {
        assert!((expected_neutral_degree(64, 2, 2).unwrap() - 20.0).abs() < 1e-12);
        assert!((expected_neutral_degree(64, 4, 2).unwrap() - 15.75).abs() < 1e-12);
        for q in 2..6 {
            assert!((expected_neutral_degree(64, 0, q).unwrap() - 64.0 / q as f64).abs() < 1e-12);
        }
        assert!(expected_neutral_degree(64, 0, 1).is_err());
    }

    #[test]
    fn file_round_trip() {
        for (k, q) in [
            (0, Quantization::Levels(2)),
            (3, Quantization::Levels(4)),
            (2, Quantization::Continuous),
        ] {
            let inst = Instance::generate(10, k, q, 77).unwrap();
            let mut buf = Vec::new();
            inst.write_to(&mut buf).unwrap();
            let back = Instance::read_from(buf.as_slice()).unwrap();
            assert_eq!(back, inst);
        }
    }

    const TWO_BIT: &str = "NKQ 1\nn 2\nk 1\nq 3\nseed 0\nL 0 1\nL 1 0\nT 0 0 1 2 0\nT 1 2 2 0 1\n";

    #[test]
    #[allow(clippy::identity_op)]
    fn hand_written_fixture() {
        let inst = Instance::read_from(TWO_BIT.as_bytes()).unwrap();
        // component 0 index = x0 x1, component 1 index = x1 x0
        let expected = [("00", 0 + 2), ("01", 1 + 0), ("10", 2 + 2), ("11", 0 + 1)];
        for (bits, total) in expected {
            let f = inst.full_evaluate(&BitString::parse(bits).unwrap()).unwrap();
            assert_eq!(f.total, total, "{bits}");
            assert_eq!(f.denom, 4);
        }
    }

    #[test]
    fn parser_rejects_deviations() {
        let cases = [
            (TWO_BIT.replace("L 0 1", "L 0 0"), 6),
            (TWO_BIT.replace("NKQ 1", "NKQ 2"), 1),
            (TWO_BIT.replace("T 1 2 2 0 1", "T 1 2 2 0"), 9),
            (TWO_BIT.replace("T 0 0 1 2 0", "T 0 0 1 3 0"), 8),
            (TWO_BIT.replace("q 3", "q  3"), 4),
            (TWO_BIT.replace("L 1 0", "L 1 0 "), 7),
            (TWO_BIT.replace("L 1 0", "L 0 0"), 7),
            (format!("{TWO_BIT}extra\n"), 10),
        ];
        for (text, line) in cases {
            match Instance::read_from(text.as_bytes()) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text}"),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
        assert!(Instance::read_from(TWO_BIT.trim_end().as_bytes()).is_err());
        assert!(Instance::read_from(TWO_BIT.replace('\n', "\r\n").as_bytes()).is_err());
    }
}
