use crate::bitstring::BitString;
use crate::landscape::{FitnessFunction, Quantization};
use crate::rng::derive_seed;

use super::{Algorithm, NeighborCursor, NeighborOrder, RandomOrder, RunRecord, Tracker};

/// Netcrawler: a random walk that accepts the first neighbour at least as good
/// as the current solution.
///
/// Strict improvements reset the per-plateau move counter, neutral moves
/// increment it. The walk restarts on a strict local optimum with no neutral
/// exit, or once the counter exceeds `k_cap`.
pub fn run_netcrawler<F: FitnessFunction + ?Sized>(landscape: &F, budget: u64, k_cap: u64, seed: u64) -> RunRecord {
    run_netcrawler_with(landscape, budget, k_cap, seed, &mut RandomOrder::for_run(seed))
}

pub fn run_netcrawler_with<F, O>(landscape: &F, budget: u64, k_cap: u64, seed: u64, order: &mut O) -> RunRecord
where
    F: FitnessFunction + ?Sized,
    O: NeighborOrder + ?Sized,
{
    crawl(landscape, budget, Some(k_cap), false, seed, order)
}

/// Move caps measured for the 64-bit NKq grid, by `(k, q)`.
pub fn reference_k_cap(k: usize, q: Quantization) -> Option<u64> {
    let row = match q {
        Quantization::Levels(2) => [23_772, 27_950, 7_733, 6_143],
        Quantization::Levels(3) => [1_891, 1_648, 1_987, 1_921],
        Quantization::Levels(4) => [8_198, 2_000, 3_593, 1_189],
        _ => return None,
    };
    match k {
        2 | 4 | 6 | 8 => Some(row[k / 2 - 1]),
        _ => None,
    }
}

/// Runs `runs` single uncapped Netcrawler descents of at most `budget`
/// evaluations and returns the largest number of evaluations any of them
/// needed to converge.
///
/// A descent that stops on a strict local optimum converged when it stopped.
/// One still walking a plateau when the budget runs out converged when it
/// last improved, since an uncapped walk never leaves a plateau that has no
/// exit.
pub fn calibrate_nc_k<F: FitnessFunction + ?Sized>(landscape: &F, runs: usize, budget: u64, seed: u64) -> u64 {
    (0..runs as u64)
        .map(|r| {
            let run_seed = derive_seed(seed, "calibrate", r);
            let mut order = RandomOrder::for_run(run_seed);
            convergence_point(&crawl(landscape, budget, None, true, run_seed, &mut order))
        })
        .max()
        .unwrap_or(0)
}

fn convergence_point(descent: &RunRecord) -> u64 {
    if descent.counters.local_optima > 0 {
        descent.evaluations_used
    } else {
        descent.trajectory.last().map_or(0, |p| p.evaluation)
    }
}

fn crawl<F, O>(
    landscape: &F,
    budget: u64,
    k_cap: Option<u64>,
    single_descent: bool,
    seed: u64,
    order: &mut O,
) -> RunRecord
where
    F: FitnessFunction + ?Sized,
    O: NeighborOrder + ?Sized,
{
    let n = landscape.len();
    let mut init = crate::rng::child_rng(seed, "init", 0);
    let mut tracker = Tracker::new(landscape, budget);

    'restarts: loop {
        let mut current = BitString::random(n, &mut init);
        let Some(mut fitness) = tracker.start(&current) else {
            break;
        };
        let mut moves = 0u64;
        let mut members = 1u64;
        loop {
            let mut accepted = None;
            for bit in NeighborCursor::new(order, n) {
                let Some(candidate) = tracker.evaluate_flip(&current, fitness, bit) else {
                    tracker.close(members);
                    break 'restarts;
                };
                if candidate >= fitness {
                    accepted = Some((bit, candidate));
                    break;
                }
            }
            let Some((bit, candidate)) = accepted else {
                tracker.converged(members, &current);
                if single_descent {
                    break 'restarts;
                }
                continue 'restarts;
            };
            current.flip(bit);
            if candidate > fitness {
                fitness = candidate;
                tracker.improve(members, &current, fitness);
                moves = 0;
                members = 1;
            } else {
                tracker.counters.neutral_moves += 1;
                moves += 1;
                members += 1;
                if k_cap.is_some_and(|cap| moves > cap) {
                    tracker.counters.cap_restarts += 1;
                    tracker.close(members);
                    continue 'restarts;
                }
            }
        }
    }

    tracker.finish(Algorithm::Netcrawler {
        k_cap: k_cap.unwrap_or(u64::MAX),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::Instance;

    fn flat(n: usize) -> Instance {
        Instance::from_parts(n, 0, Quantization::Levels(2), 0, vec![], vec![1; 2 * n]).unwrap()
    }

    #[test]
    fn flat_landscape_restarts_on_the_cap() {
        // Every neighbour is neutral, so each move costs one evaluation: a
        // cycle is one start plus k_cap + 1 moves.
        for (budget, k_cap) in [(1_000u64, 10u64), (100_000, 1_987), (37, 3)] {
            let rec = run_netcrawler(&flat(16), budget, k_cap, 2);
            let cycle = k_cap + 2;
            assert_eq!(rec.restarts, (budget - 1) / cycle, "budget {budget}, cap {k_cap}");
            assert_eq!(rec.evaluations_used, budget);
            assert_eq!(rec.counters.cap_restarts, budget / cycle);
        }
    }

    #[test]
    fn continuous_walk_stops_on_local_optima() {
        let inst = Instance::generate(20, 3, Quantization::Continuous, 4).unwrap();
        let rec = run_netcrawler(&inst, 20_000, 50, 9);
        assert_eq!(rec.counters.neutral_moves, 0);
        assert!(rec.terminals.len() > 5);
        for t in &rec.terminals {
            let f = inst.full_evaluate(t).unwrap();
            for b in 0..20 {
                assert!(inst.full_evaluate(&t.flipped(b)).unwrap() < f);
            }
        }
    }

    #[test]
    fn reference_caps() {
        assert_eq!(reference_k_cap(6, Quantization::Levels(3)), Some(1_987));
        assert_eq!(reference_k_cap(8, Quantization::Levels(4)), Some(1_189));
        assert_eq!(reference_k_cap(2, Quantization::Levels(2)), Some(23_772));
        assert_eq!(reference_k_cap(3, Quantization::Levels(2)), None);
        assert_eq!(reference_k_cap(2, Quantization::Continuous), None);
    }

    #[test]
    fn calibration_cases() {
        // The walk never improves on its start.
        assert_eq!(calibrate_nc_k(&flat(12), 3, 500, 1), 1);

        let inst = Instance::generate(32, 4, Quantization::Levels(4), 8).unwrap();
        let single = calibrate_nc_k(&inst, 1, 100_000, 5);
        let run_seed = derive_seed(5, "calibrate", 0);
        let rec = crawl(
            &inst,
            100_000,
            None,
            true,
            run_seed,
            &mut RandomOrder::for_run(run_seed),
        );
        assert_eq!(single, convergence_point(&rec));
        assert!(single <= rec.evaluations_used);
        assert!(calibrate_nc_k(&inst, 5, 100_000, 5) >= single);

        // Without neutrality every descent ends on a strict local optimum.
        let cont = Instance::generate(32, 4, Quantization::Continuous, 3).unwrap();
        let rec = crawl(&cont, 100_000, None, true, 4, &mut RandomOrder::for_run(4));
        assert_eq!(rec.counters.local_optima, 1);
        assert_eq!(convergence_point(&rec), rec.evaluations_used);
    }

    #[test]
    fn calibrated_caps_match_the_reference_magnitude() {
        let inst = Instance::generate(64, 6, Quantization::Levels(3), 1).unwrap();
        let cap = calibrate_nc_k(&inst, 30, 100_000, 3);
        let reference = reference_k_cap(6, Quantization::Levels(3)).unwrap();
        assert!(cap > reference / 10 && cap < reference * 10, "{cap}");
    }
}
