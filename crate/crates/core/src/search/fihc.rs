use crate::bitstring::BitString;
use crate::landscape::FitnessFunction;
use crate::rng::child_rng;

use super::{Algorithm, NeighborCursor, NeighborOrder, RandomOrder, RunRecord, Tracker};

/// First-improvement hill climbing with random restarts.
///
/// Neighbours are scanned in a fresh random order after every accepted move
/// and the first strictly better one is taken. Neutral neighbours are never
/// accepted. A full scan without improvement is a local optimum and triggers
/// a restart.
pub fn run_fihc<F: FitnessFunction + ?Sized>(landscape: &F, budget: u64, seed: u64) -> RunRecord {
    run_fihc_with(landscape, budget, seed, &mut RandomOrder::for_run(seed))
}

pub fn run_fihc_with<F, O>(landscape: &F, budget: u64, seed: u64, order: &mut O) -> RunRecord
where
    F: FitnessFunction + ?Sized,
    O: NeighborOrder + ?Sized,
{
    let n = landscape.len();
    let mut init = child_rng(seed, "init", 0);
    let mut tracker = Tracker::new(landscape, budget);

    'restarts: loop {
        let mut current = BitString::random(n, &mut init);
        let Some(mut fitness) = tracker.start(&current) else {
            break;
        };
        loop {
            let mut improved = false;
            for bit in NeighborCursor::new(order, n) {
                let Some(candidate) = tracker.evaluate_flip(&current, fitness, bit) else {
                    tracker.close(1);
                    break 'restarts;
                };
                if candidate > fitness {
                    current.flip(bit);
                    fitness = candidate;
                    tracker.improve(1, &current, fitness);
                    improved = true;
                    break;
                }
            }
            if !improved {
                tracker.converged(1, &current);
                continue 'restarts;
            }
        }
    }

    tracker.finish(Algorithm::Fihc)
}
