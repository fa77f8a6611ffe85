//! Budgeted local search with random restarts.
//!
//! Every algorithm starts from a uniform random solution, climbs until it
//! considers itself converged, then restarts from a fresh random solution,
//! keeping the best solution ever seen. All of them stop as soon as the
//! evaluation budget is spent, possibly in the middle of a climb. Every
//! fitness computation counts against the budget, including the evaluation
//! of each random starting point.
//!
//! A run draws from three independent streams derived from its seed: `init`
//! (starting points), `order` (neighbour permutations) and `select` (plateau
//! member choice). The neighbour-order stream can be replaced through the
//! `*_with` entry points.

mod fihc;
mod netcrawler;
mod plateau;

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bitstring::BitString;
use crate::landscape::{FitnessFunction, IntegerFitness};
use crate::rng::{child_rng, Rng};

pub use fihc::{run_fihc, run_fihc_with};
pub use netcrawler::{calibrate_nc_k, reference_k_cap, run_netcrawler, run_netcrawler_with};
pub use plateau::{run_plateau_search, run_plateau_search_with};

/// How the plateau engine picks the member whose neighbourhood it samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionPolicy {
    /// A uniformly random non-visited member (F2NS).
    Uniform,
    /// The non-visited member with the highest UCB score over AUC rewards
    /// (VEGAS).
    Ucb { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Fihc,
    Netcrawler { k_cap: u64 },
    F2ns,
    Vegas { c: f64 },
}

impl Algorithm {
    /// Short identifier used in result files.
    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Fihc => "fihc",
            Algorithm::Netcrawler { .. } => "nc",
            Algorithm::F2ns => "f2ns",
            Algorithm::Vegas { .. } => "vegas",
        }
    }

    /// The exploration constant, for VEGAS only.
    pub fn c(&self) -> Option<f64> {
        match self {
            Algorithm::Vegas { c } => Some(*c),
            _ => None,
        }
    }

    pub fn run<F: FitnessFunction + ?Sized>(&self, landscape: &F, budget: u64, seed: u64) -> RunRecord {
        match *self {
            Algorithm::Fihc => run_fihc(landscape, budget, seed),
            Algorithm::Netcrawler { k_cap } => run_netcrawler(landscape, budget, k_cap, seed),
            Algorithm::F2ns => run_plateau_search(landscape, budget, SelectionPolicy::Uniform, seed),
            Algorithm::Vegas { c } => run_plateau_search(landscape, budget, SelectionPolicy::Ucb { c }, seed),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Vegas { c } => write!(f, "vegas(c={c})"),
            Algorithm::Netcrawler { k_cap } => write!(f, "nc(k={k_cap})"),
            other => f.write_str(other.id()),
        }
    }
}

/// Source of neighbour visiting orders.
pub trait NeighborOrder {
    /// Replaces the contents of `order` with a permutation of `0..n`.
    fn fill(&mut self, order: &mut Vec<u32>, n: usize);
}

impl<O: NeighborOrder + ?Sized> NeighborOrder for &mut O {
    fn fill(&mut self, order: &mut Vec<u32>, n: usize) {
        (**self).fill(order, n)
    }
}

/// Uniform random permutations (Fisher-Yates).
#[derive(Debug, Clone)]
pub struct RandomOrder {
    rng: Rng,
}

impl RandomOrder {
    pub fn new(rng: Rng) -> Self {
        Self { rng }
    }

    /// The order stream a run with `seed` uses by default.
    pub fn for_run(seed: u64) -> Self {
        Self::new(child_rng(seed, "order", 0))
    }
}

impl NeighborOrder for RandomOrder {
    fn fill(&mut self, order: &mut Vec<u32>, n: usize) {
        order.clear();
        order.extend(0..n as u32);
        order.shuffle(&mut self.rng);
    }
}

/// Walks the neighbourhood of one solution in a fixed random order, yielding
/// each bit position at most once.
#[derive(Debug, Clone)]
pub struct NeighborCursor {
    order: Vec<u32>,
    next: usize,
}

impl NeighborCursor {
    pub fn new<O: NeighborOrder + ?Sized>(source: &mut O, n: usize) -> Self {
        let mut order = Vec::with_capacity(n);
        source.fill(&mut order, n);
        Self { order, next: 0 }
    }

    pub fn is_exhausted(&self) -> bool {
        self.next == self.order.len()
    }

    pub fn remaining(&self) -> usize {
        self.order.len() - self.next
    }
}

impl Iterator for NeighborCursor {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let bit = *self.order.get(self.next)?;
        self.next += 1;
        Some(bit as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Evaluations spent when the new best was found (1-based).
    pub evaluation: u64,
    pub best_norm: f64,
}

/// One stay on a fitness level: from a restart or an improvement up to the
/// next improvement, restart, or the end of the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateauEpisode {
    pub level: u64,
    /// Distinct solutions of this level the search held when it left: the
    /// member set for plateau search, accepted walk positions for Netcrawler,
    /// always 1 for hill climbing.
    pub members: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub improving_moves: u64,
    pub neutral_moves: u64,
    /// Neutral neighbours that were already plateau members.
    pub duplicate_neighbors: u64,
    /// Netcrawler restarts forced by the move cap.
    pub cap_restarts: u64,
    /// Descents that ended on a local optimum (or local-optimum plateau).
    pub local_optima: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub budget: u64,
    pub best_solution: BitString,
    pub best_fitness: IntegerFitness,
    pub evaluations_used: u64,
    /// Random restarts after the first start.
    pub restarts: u64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub plateau_log: Vec<PlateauEpisode>,
    pub counters: Counters,
    /// A solution from every converged descent, in order.
    pub terminals: Vec<BitString>,
}

impl RunRecord {
    pub fn best_norm(&self) -> f64 {
        self.best_fitness.normalized()
    }

    pub fn plateau_count(&self) -> usize {
        self.plateau_log.len()
    }

    /// Mean member count over the plateau episodes, 0 when there are none.
    pub fn mean_plateau_size(&self) -> f64 {
        if self.plateau_log.is_empty() {
            return 0.0;
        }
        self.plateau_log.iter().map(|p| p.members as f64).sum::<f64>() / self.plateau_log.len() as f64
    }
}

/// Shared bookkeeping: budget, best-so-far, trajectory and episode log.
struct Tracker<'a, F: ?Sized> {
    landscape: &'a F,
    budget: u64,
    used: u64,
    starts: u64,
    best: Option<(BitString, IntegerFitness)>,
    trajectory: Vec<TrajectoryPoint>,
    plateau_log: Vec<PlateauEpisode>,
    episode: Option<(u64, u64)>,
    counters: Counters,
    terminals: Vec<BitString>,
}

impl<'a, F: FitnessFunction + ?Sized> Tracker<'a, F> {
    fn new(landscape: &'a F, budget: u64) -> Self {
        Self {
            landscape,
            budget,
            used: 0,
            starts: 0,
            best: None,
            trajectory: Vec::new(),
            plateau_log: Vec::new(),
            episode: None,
            counters: Counters::default(),
            terminals: Vec::new(),
        }
    }

    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// Evaluates a fresh starting point and opens its episode. `None` once
    /// the budget is spent.
    fn start(&mut self, solution: &BitString) -> Option<IntegerFitness> {
        if self.exhausted() {
            return None;
        }
        self.starts += 1;
        let start = self.used;
        self.used += 1;
        let f = self.landscape.evaluate(solution);
        self.episode = Some((f.total, start));
        self.offer(solution, f);
        Some(f)
    }

    fn evaluate_flip(&mut self, solution: &BitString, current: IntegerFitness, bit: usize) -> Option<IntegerFitness> {
        if self.exhausted() {
            return None;
        }
        self.used += 1;
        Some(self.landscape.evaluate_flip(solution, current, bit))
    }

    /// Closes the current episode and opens one on the improved level.
    fn improve(&mut self, members: u64, solution: &BitString, f: IntegerFitness) {
        self.close(members);
        self.counters.improving_moves += 1;
        self.episode = Some((f.total, self.used));
        self.offer(solution, f);
    }

    fn converged(&mut self, members: u64, terminal: &BitString) {
        self.counters.local_optima += 1;
        self.terminals.push(terminal.clone());
        self.close(members);
    }

    fn close(&mut self, members: u64) {
        if let Some((level, since)) = self.episode.take() {
            self.plateau_log.push(PlateauEpisode {
                level,
                members,
                evaluations: self.used - since,
            });
        }
    }

    fn offer(&mut self, solution: &BitString, f: IntegerFitness) {
        if self.best.as_ref().is_some_and(|(_, b)| *b >= f) {
            return;
        }
        self.best = Some((solution.clone(), f));
        self.trajectory.push(TrajectoryPoint {
            evaluation: self.used,
            best_norm: f.normalized(),
        });
    }

    fn finish(self, algorithm: Algorithm) -> RunRecord {
        debug_assert!(self.episode.is_none());
        let (best_solution, best_fitness) = self.best.unwrap_or_else(|| {
            // Only reachable with a zero budget.
            let s = BitString::zeros(self.landscape.len());
            let f = IntegerFitness { total: 0, denom: 1 };
            (s, f)
        });
        RunRecord {
            algorithm,
            budget: self.budget,
            best_solution,
            best_fitness,
            evaluations_used: self.used,
            restarts: self.starts.saturating_sub(1),
            trajectory: self.trajectory,
            plateau_log: self.plateau_log,
            counters: self.counters,
            terminals: self.terminals,
        }
    }
}
