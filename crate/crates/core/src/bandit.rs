//! Multi-armed bandit over plateau members.
//!
//! Each arm is a plateau member; pulling it evaluates one more neighbour of
//! that member. The reward of an arm is the area under the curve (AUC) of the
//! fitness values its neighbours produced, ranked against the values produced
//! by every other arm. This is the one-vs-rest Mann-Whitney statistic:
//!
//! ```text
//! reward_a = (wins + ties / 2) / (n_a * n_rest)
//! ```
//!
//! where `wins` counts pairs `(x, y)` with `x` from arm `a`, `y` from any other
//! arm and `x > y`. Only ranks matter, so any strictly increasing transform of
//! the fitness values leaves every reward unchanged. The score of an arm is
//! the UCB bound
//!
//! ```text
//! score_a = reward_a + c * sqrt(ln(total_tried) / tried_a)
//! ```
//!
//! and untried arms score `+inf`.

use rand::Rng;
use thiserror::Error;

pub type ArmId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmStats<V = u64> {
    pub arm_id: ArmId,
    /// Fitness of every neighbour this arm produced, in evaluation order.
    pub history: Vec<V>,
    /// Cleared once the arm's neighbourhood is exhausted.
    pub eligible: bool,
}

impl<V> ArmStats<V> {
    pub fn new(arm_id: ArmId) -> Self {
        Self {
            arm_id,
            history: Vec::new(),
            eligible: true,
        }
    }

    pub fn tried(&self) -> usize {
        self.history.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditState<V = u64> {
    pub arms: Vec<ArmStats<V>>,
    /// Exploration constant.
    pub c: f64,
}

impl<V> BanditState<V> {
    pub fn new(c: f64) -> Self {
        Self { arms: Vec::new(), c }
    }

    pub fn total_tried(&self) -> usize {
        self.arms.iter().map(ArmStats::tried).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no eligible arm left")]
pub struct NoEligibleArm;

/// Turns a doubled one-vs-rest rank count `2 * wins + ties` into a reward.
/// Arms without a comparator (either side empty) get the neutral 0.5.
#[inline]
pub fn reward_from_counts(doubled: u64, n_arm: u64, n_rest: u64) -> f64 {
    if n_arm == 0 || n_rest == 0 {
        0.5
    } else {
        doubled as f64 / (2 * n_arm * n_rest) as f64
    }
}

/// The UCB exploration term for an arm tried `tried` times, given
/// `ln(total_tried)`.
#[inline]
pub fn exploration_bonus(c: f64, ln_total: f64, tried: u64) -> f64 {
    c * (ln_total / tried as f64).sqrt()
}

/// AUC reward of every arm, in the order of `arms`.
pub fn auc_rewards<V: Ord + Copy>(arms: &[ArmStats<V>]) -> Vec<f64> {
    let mut pooled: Vec<V> = arms.iter().flat_map(|a| a.history.iter().copied()).collect();
    pooled.sort_unstable();
    let total = pooled.len() as u64;

    arms.iter()
        .map(|arm| {
            let n_arm = arm.history.len() as u64;
            // Against the whole pool each value scores 2 * below + equal; the
            // arm's own n_arm^2 self-comparisons contribute exactly n_arm^2.
            let against_pool: u64 = arm
                .history
                .iter()
                .map(|x| {
                    let below = pooled.partition_point(|y| y < x) as u64;
                    let not_above = pooled.partition_point(|y| y <= x) as u64;
                    2 * below + (not_above - below)
                })
                .sum();
            reward_from_counts(against_pool - n_arm * n_arm, n_arm, total - n_arm)
        })
        .collect()
}

/// UCB score of every arm, in the order of `state.arms`.
pub fn ucb_scores<V: Ord + Copy>(state: &BanditState<V>) -> Vec<f64> {
    let rewards = auc_rewards(&state.arms);
    let ln_total = (state.total_tried().max(1) as f64).ln();
    state
        .arms
        .iter()
        .zip(rewards)
        .map(|(arm, reward)| match arm.tried() {
            0 => f64::INFINITY,
            tried => reward + exploration_bonus(state.c, ln_total, tried as u64),
        })
        .collect()
}

/// Picks the eligible arm with the highest score, breaking ties uniformly.
///
/// The generator is only consulted when more than one arm ties.
pub fn select<V: Ord + Copy, R: Rng + ?Sized>(state: &BanditState<V>, rng: &mut R) -> Result<ArmId, NoEligibleArm> {
    let scores = ucb_scores(state);
    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<ArmId> = Vec::new();
    for (arm, score) in state.arms.iter().zip(scores) {
        if !arm.eligible {
            continue;
        }
        if score > best || tied.is_empty() {
            best = score;
            tied.clear();
            tied.push(arm.arm_id);
        } else if score == best {
            tied.push(arm.arm_id);
        }
    }
    pick_uniform(&tied, rng).ok_or(NoEligibleArm)
}

pub(crate) fn pick_uniform<T: Copy, R: Rng + ?Sized>(items: &[T], rng: &mut R) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0]),
        len => Some(items[rng.gen_range(0..len)]),
    }
}
