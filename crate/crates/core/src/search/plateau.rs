//! Plateau search: the F2NS and VEGAS engines.
//!
//! The engine keeps every evaluated solution of the current fitness level in
//! a member set. Each step it selects a non-visited member, evaluates one of
//! its not-yet-seen neighbours and then:
//!
//! * on a strictly better neighbour, replaces the whole set with that
//!   neighbour and forgets all bandit statistics;
//! * on an equal neighbour, adds it to the set (a no-op if already present);
//! * in every other case keeps the set as is.
//!
//! The neighbour's fitness is appended to the selecting member's history
//! unless the set was just replaced. A member whose neighbourhood is
//! exhausted becomes visited. Once all members are visited the plateau is a
//! local-optimum plateau and the search restarts.
//!
//! The two policies share every transition except member selection. Under
//! [`SelectionPolicy::Ucb`] the selected member maximizes
//! `reward + c * sqrt(ln(total_tried) / tried)`, where the reward is the
//! one-vs-rest AUC of the member's history (see [`crate::bandit`]). Rewards are
//! recomputed from the histories on every selection. Histories are kept as
//! counts per distinct fitness value and members with equal histories are
//! scored together, so the recomputation is exact and linear in the number of
//! distinct histories.

use rand::Rng as _;
use rustc_hash::FxHashMap as HashMap;

use crate::bandit::{exploration_bonus, pick_uniform, reward_from_counts};
use crate::bitstring::BitString;
use crate::landscape::{FitnessFunction, IntegerFitness};
use crate::rng::{child_rng, splitmix64, Rng};

use super::{Algorithm, NeighborCursor, NeighborOrder, RandomOrder, RunRecord, SelectionPolicy, Tracker};

pub fn run_plateau_search<F: FitnessFunction + ?Sized>(
    landscape: &F,
    budget: u64,
    policy: SelectionPolicy,
    seed: u64,
) -> RunRecord {
    run_plateau_search_with(landscape, budget, policy, seed, &mut RandomOrder::for_run(seed))
}

pub fn run_plateau_search_with<F, O>(
    landscape: &F,
    budget: u64,
    policy: SelectionPolicy,
    seed: u64,
    order: &mut O,
) -> RunRecord
where
    F: FitnessFunction + ?Sized,
    O: NeighborOrder + ?Sized,
{
    let n = landscape.len();
    let mut init = child_rng(seed, "init", 0);
    let mut select_rng = child_rng(seed, "select", 0);
    let mut tracker = Tracker::new(landscape, budget);
    let mut plateau = Plateau::new(policy);

    'restarts: loop {
        let start = BitString::random(n, &mut init);
        let Some(fitness) = tracker.start(&start) else {
            break;
        };
        plateau.reset(start, fitness);

        loop {
            let Some(m) = plateau.select(policy, &mut select_rng) else {
                let terminal = plateau.members[0].solution.clone();
                tracker.converged(plateau.len(), &terminal);
                continue 'restarts;
            };
            let bit = plateau.draw_neighbor(m, order, n);
            let level = plateau.level;
            let Some(candidate) = tracker.evaluate_flip(&plateau.members[m].solution, level, bit) else {
                tracker.close(plateau.len());
                break 'restarts;
            };

            if candidate > level {
                let next = plateau.members[m].solution.flipped(bit);
                tracker.improve(plateau.len(), &next, candidate);
                plateau.reset(next, candidate);
                continue;
            }
            if candidate == level {
                let neighbour = plateau.members[m].solution.flipped(bit);
                if plateau.insert(neighbour) {
                    tracker.counters.neutral_moves += 1;
                } else {
                    tracker.counters.duplicate_neighbors += 1;
                }
            }
            plateau.record(m, candidate.total);
        }
    }

    let algorithm = match policy {
        SelectionPolicy::Uniform => Algorithm::F2ns,
        SelectionPolicy::Ucb { c } => Algorithm::Vegas { c },
    };
    tracker.finish(algorithm)
}

// Position of a member in the selection structures.
const NOWHERE: usize = usize::MAX;

#[derive(Debug)]
struct Member {
    solution: BitString,
    cursor: Option<NeighborCursor>,
    tried: u64,
    visited: bool,
    // (value slot, count) pairs sorted by slot.
    history: Vec<(u32, u64)>,
    // Order-independent hash of `history`.
    history_hash: u64,
    open_pos: usize,
    class: usize,
    // Position in `untried` or in the member list of `class`.
    group_pos: usize,
}

// Open members sharing one history. They have identical UCB scores, so
// selection scores each class once. Equal histories may still end up in
// different classes after a hash collision.
#[derive(Debug)]
struct Class {
    tried: u64,
    // Shared history while the class is non-empty.
    history: Vec<(u32, u64)>,
    members: Vec<usize>,
    // Position in by_tried[tried] while non-empty.
    active_pos: usize,
}

/// The evaluated part of the current neutral network.
#[derive(Debug, Default)]
pub(crate) struct Plateau {
    level: IntegerFitness,
    // Whether open members are grouped into classes for UCB selection.
    classify: bool,
    members: Vec<Member>,
    index: HashMap<BitString, usize>,
    // Non-visited members.
    open: Vec<usize>,
    // Non-visited members never pulled.
    untried: Vec<usize>,
    // classes[..live_classes] belong to this plateau; the rest are kept for
    // their allocations.
    classes: Vec<Class>,
    live_classes: usize,
    class_of: HashMap<u64, usize>,
    // by_tried[t]: non-empty classes of members pulled exactly t times.
    by_tried: Vec<Vec<usize>>,
    // Distinct fitness totals seen in histories, and how often each was seen.
    slot_values: Vec<u64>,
    slot_counts: Vec<u64>,
    slot_of: HashMap<u64, u32>,
    total_tried: u64,
    // Scratch.
    weights: Vec<u64>,
    sorted_slots: Vec<u32>,
    tied: Vec<usize>,
}

impl Plateau {
    fn new(policy: SelectionPolicy) -> Self {
        Self {
            classify: matches!(policy, SelectionPolicy::Ucb { .. }),
            ..Self::default()
        }
    }

    fn reset(&mut self, solution: BitString, level: IntegerFitness) {
        self.level = level;
        self.members.clear();
        self.index.clear();
        self.open.clear();
        self.untried.clear();
        self.live_classes = 0;
        self.class_of.clear();
        self.by_tried.iter_mut().for_each(Vec::clear);
        self.slot_values.clear();
        self.slot_counts.clear();
        self.slot_of.clear();
        self.total_tried = 0;
        self.insert(solution);
    }

    fn len(&self) -> u64 {
        self.members.len() as u64
    }

    /// Adds a member; false if it was already present.
    fn insert(&mut self, solution: BitString) -> bool {
        let id = self.members.len();
        if self.index.contains_key(&solution) {
            return false;
        }
        self.index.insert(solution.clone(), id);
        self.members.push(Member {
            solution,
            cursor: None,
            tried: 0,
            visited: false,
            history: Vec::new(),
            history_hash: 0,
            open_pos: self.open.len(),
            class: NOWHERE,
            group_pos: self.untried.len(),
        });
        self.open.push(id);
        self.untried.push(id);
        true
    }

    fn draw_neighbor<O: NeighborOrder + ?Sized>(&mut self, m: usize, order: &mut O, n: usize) -> usize {
        let cursor = self.members[m]
            .cursor
            .get_or_insert_with(|| NeighborCursor::new(order, n));
        cursor.next().expect("selected member has unseen neighbours")
    }

    /// Appends `value` to member `m`'s history and retires the member once its
    /// neighbourhood is exhausted.
    fn record(&mut self, m: usize, value: u64) {
        let slot = match self.slot_of.get(&value) {
            Some(&s) => s,
            None => {
                let s = self.slot_values.len() as u32;
                self.slot_values.push(value);
                self.slot_counts.push(0);
                self.slot_of.insert(value, s);
                s
            }
        };
        self.slot_counts[slot as usize] += 1;
        self.total_tried += 1;

        self.remove_from_group(m);
        let member = &mut self.members[m];
        member.tried += 1;
        member.history_hash = member.history_hash.wrapping_add(splitmix64(slot as u64));
        match member.history.binary_search_by_key(&slot, |&(s, _)| s) {
            Ok(i) => member.history[i].1 += 1,
            Err(i) => member.history.insert(i, (slot, 1)),
        }

        if member.cursor.as_ref().is_some_and(NeighborCursor::is_exhausted) {
            member.visited = true;
            member.cursor = None;
            let pos = std::mem::replace(&mut member.open_pos, NOWHERE);
            self.open.swap_remove(pos);
            if let Some(&moved) = self.open.get(pos) {
                self.members[moved].open_pos = pos;
            }
            return;
        }

        if !self.classify {
            return;
        }
        let tried = member.tried;
        let hash = member.history_hash;
        let class = match self.class_of.get(&hash).copied() {
            Some(c) if self.fits(c, m) => c,
            found => {
                let c = self.new_class();
                if found.is_none() {
                    self.class_of.insert(hash, c);
                }
                c
            }
        };
        let member = &mut self.members[m];
        let entry = &mut self.classes[class];
        if entry.members.is_empty() {
            entry.tried = tried;
            entry.history.clear();
            entry.history.extend_from_slice(&member.history);
        }
        member.class = class;
        member.group_pos = entry.members.len();
        entry.members.push(m);
        if entry.active_pos == NOWHERE {
            let t = tried as usize;
            if self.by_tried.len() <= t {
                self.by_tried.resize_with(t + 1, Vec::new);
            }
            self.classes[class].active_pos = self.by_tried[t].len();
            self.by_tried[t].push(class);
        }
    }

    // Whether member `m` may join class `c`.
    fn fits(&self, c: usize, m: usize) -> bool {
        let class = &self.classes[c];
        class.members.is_empty() || class.history == self.members[m].history
    }

    fn new_class(&mut self) -> usize {
        let c = self.live_classes;
        self.live_classes += 1;
        if c == self.classes.len() {
            self.classes.push(Class {
                tried: 0,
                history: Vec::new(),
                members: Vec::new(),
                active_pos: NOWHERE,
            });
        } else {
            let class = &mut self.classes[c];
            class.members.clear();
            class.active_pos = NOWHERE;
        }
        c
    }

    fn remove_from_group(&mut self, m: usize) {
        let pos = self.members[m].group_pos;
        self.members[m].group_pos = NOWHERE;
        if self.members[m].tried == 0 {
            self.untried.swap_remove(pos);
            if let Some(&moved) = self.untried.get(pos) {
                self.members[moved].group_pos = pos;
            }
            return;
        }
        if !self.classify {
            return;
        }
        let class = std::mem::replace(&mut self.members[m].class, NOWHERE);
        let group = &mut self.classes[class].members;
        group.swap_remove(pos);
        if let Some(&moved) = group.get(pos) {
            self.members[moved].group_pos = pos;
        }
        if group.is_empty() {
            let t = self.classes[class].tried as usize;
            let active = std::mem::replace(&mut self.classes[class].active_pos, NOWHERE);
            self.by_tried[t].swap_remove(active);
            if let Some(&moved) = self.by_tried[t].get(active) {
                self.classes[moved].active_pos = active;
            }
        }
    }

    fn select(&mut self, policy: SelectionPolicy, rng: &mut Rng) -> Option<usize> {
        match policy {
            SelectionPolicy::Uniform => pick_uniform(&self.open, rng),
            SelectionPolicy::Ucb { c } => self.select_ucb(c, rng),
        }
    }

    fn select_ucb(&mut self, c: f64, rng: &mut Rng) -> Option<usize> {
        if !self.untried.is_empty() {
            return pick_uniform(&self.untried, rng);
        }
        if self.open.is_empty() {
            return None;
        }
        self.compute_weights();

        let ln_total = (self.total_tried as f64).ln();
        let mut best = f64::NEG_INFINITY;
        let mut tied_members = 0;
        self.tied.clear();
        for (tried, group) in self.by_tried.iter().enumerate().skip(1) {
            if group.is_empty() {
                continue;
            }
            let t = tried as u64;
            let bonus = exploration_bonus(c, ln_total, t);
            // Rewards never exceed 1, so later (larger tried) groups cannot win.
            if 1.0 + bonus < best {
                break;
            }
            for &class in group {
                let against_pool: u64 = self.classes[class]
                    .history
                    .iter()
                    .map(|&(slot, count)| count * self.weights[slot as usize])
                    .sum();
                let reward = reward_from_counts(against_pool - t * t, t, self.total_tried - t);
                let score = reward + bonus;
                let size = self.classes[class].members.len();
                if score > best {
                    best = score;
                    self.tied.clear();
                    self.tied.push(class);
                    tied_members = size;
                } else if score == best {
                    self.tied.push(class);
                    tied_members += size;
                }
            }
        }
        let mut pick = if tied_members > 1 {
            rng.gen_range(0..tied_members)
        } else {
            0
        };
        for &class in &self.tied {
            let members = &self.classes[class].members;
            if pick < members.len() {
                return Some(members[pick]);
            }
            pick -= members.len();
        }
        None
    }

    /// weights[slot] = 2 * (pooled values below) + (pooled values equal).
    fn compute_weights(&mut self) {
        let values = &self.slot_values;
        self.sorted_slots.clear();
        self.sorted_slots.extend(0..values.len() as u32);
        self.sorted_slots.sort_unstable_by_key(|&s| values[s as usize]);
        self.weights.clear();
        self.weights.resize(values.len(), 0);
        let mut below = 0u64;
        for &s in &self.sorted_slots {
            let count = self.slot_counts[s as usize];
            self.weights[s as usize] = 2 * below + count;
            below += count;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{self, ArmStats, BanditState};
    use crate::landscape::{Instance, Quantization};
    use crate::rng::rng_from_seed;

    fn flat(n: usize) -> Instance {
        Instance::from_parts(n, 0, Quantization::Levels(2), 0, vec![], vec![0; 2 * n]).unwrap()
    }

    fn as_bandit(p: &Plateau, c: f64) -> BanditState {
        let arms = p
            .members
            .iter()
            .enumerate()
            .map(|(id, m)| ArmStats {
                arm_id: id,
                history: m
                    .history
                    .iter()
                    .flat_map(|&(slot, count)| std::iter::repeat_n(p.slot_values[slot as usize], count as usize))
                    .collect(),
                eligible: !m.visited,
            })
            .collect();
        BanditState { arms, c }
    }

    #[test]
    fn flat_cube_is_fully_enumerated() {
        for policy in [SelectionPolicy::Uniform, SelectionPolicy::Ucb { c: 1.0 }] {
            // 1 start + 8 members * 3 neighbours = 25 evaluations per plateau.
            let rec = run_plateau_search(&flat(3), 25 * 4, policy, 3);
            assert_eq!(rec.restarts, 3);
            assert_eq!(rec.plateau_log.len(), 4);
            for ep in &rec.plateau_log {
                assert_eq!(ep.members, 8);
                assert_eq!(ep.evaluations, 25);
            }
            assert_eq!(rec.counters.local_optima, 4);
            assert_eq!(rec.counters.neutral_moves, 4 * 7);
            assert_eq!(rec.counters.duplicate_neighbors, 4 * (24 - 7));
        }
    }

    #[test]
    fn members_share_the_level_and_improvements_reset() {
        let inst = Instance::generate(4, 1, Quantization::Levels(2), 2).unwrap();
        let mut order = RandomOrder::new(rng_from_seed(1));
        let mut rng = rng_from_seed(2);
        let mut plateau = Plateau::new(SelectionPolicy::Ucb { c: 0.5 });
        let start = BitString::random(4, &mut rng);
        let f = inst.full_evaluate(&start).unwrap();
        plateau.reset(start, f);
        for _ in 0..200 {
            let Some(m) = plateau.select(SelectionPolicy::Ucb { c: 0.5 }, &mut rng) else {
                let s = BitString::random(4, &mut rng);
                let f = inst.full_evaluate(&s).unwrap();
                plateau.reset(s, f);
                continue;
            };
            let bit = plateau.draw_neighbor(m, &mut order, 4);
            let cand = inst
                .delta_evaluate(&plateau.members[m].solution, plateau.level, bit)
                .unwrap();
            if cand > plateau.level {
                let next = plateau.members[m].solution.flipped(bit);
                plateau.reset(next, cand);
                assert_eq!(plateau.members.len(), 1);
                continue;
            }
            if cand == plateau.level {
                plateau.insert(plateau.members[m].solution.flipped(bit));
            }
            plateau.record(m, cand.total);
            for member in &plateau.members {
                assert_eq!(inst.full_evaluate(&member.solution).unwrap(), plateau.level);
                assert_eq!(member.visited, member.tried == 4);
            }
        }
    }

    #[test]
    fn fast_selection_agrees_with_reference_bandit() {
        let mut rng = rng_from_seed(77);
        for trial in 0..300 {
            let mut p = Plateau::new(SelectionPolicy::Ucb { c: 0.0 });
            let n_members = rng.gen_range(1..12);
            p.reset(BitString::zeros(8), IntegerFitness { total: 10, denom: 16 });
            for i in 1..n_members {
                let mut s = BitString::zeros(8);
                for b in 0..8 {
                    if (i >> b) & 1 == 1 {
                        s.flip(b);
                    }
                }
                p.insert(s);
            }
            let mut order = RandomOrder::new(rng_from_seed(trial));
            let pulls = rng.gen_range(0..40);
            for _ in 0..pulls {
                let m = rng.gen_range(0..p.members.len());
                if p.members[m].visited {
                    continue;
                }
                p.draw_neighbor(m, &mut order, 8);
                p.record(m, rng.gen_range(5..11));
            }
            let c = [0.0, 0.01, 0.3, 1.0, 100.0][trial as usize % 5];
            let state = as_bandit(&p, c);
            if p.open.is_empty() {
                assert_eq!(bandit::select(&state, &mut rng), Err(bandit::NoEligibleArm));
                continue;
            }
            let scores = bandit::ucb_scores(&state);
            let best = state
                .arms
                .iter()
                .filter(|a| a.eligible)
                .map(|a| scores[a.arm_id])
                .fold(f64::NEG_INFINITY, f64::max);
            for _ in 0..5 {
                let picked = p.select(SelectionPolicy::Ucb { c }, &mut rng).unwrap();
                assert!(state.arms[picked].eligible);
                assert_eq!(scores[picked], best, "trial {trial}");
            }
        }
    }
}
