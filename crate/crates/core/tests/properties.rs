use proptest::prelude::*;
use rand::Rng as _;

use vegas::bandit::{auc_rewards, select, ucb_scores, ArmStats, BanditState};
use vegas::harness::{normalize_fitness, wilcoxon_paired};
use vegas::rng::rng_from_seed;
use vegas::{BitString, FitnessFunction, Instance, Quantization};

const CELLS: [(usize, u32); 12] = [
    (2, 2),
    (2, 3),
    (2, 4),
    (4, 2),
    (4, 3),
    (4, 4),
    (6, 2),
    (6, 3),
    (6, 4),
    (8, 2),
    (8, 3),
    (8, 4),
];

#[test]
fn delta_matches_full_evaluation_on_every_cell() {
    let mut rng = rng_from_seed(11);
    let quantizations = CELLS
        .iter()
        .map(|&(k, q)| (k, Quantization::Levels(q)))
        .chain([(4, Quantization::Continuous)]);
    for (k, q) in quantizations {
        let inst = Instance::generate(64, k, q, 100 + k as u64).unwrap();
        for _ in 0..10_000 {
            let s = BitString::random(64, &mut rng);
            let f = inst.full_evaluate(&s).unwrap();
            let bit = rng.gen_range(0..64);
            let delta = inst.delta_evaluate(&s, f, bit).unwrap();
            assert_eq!(delta, inst.full_evaluate(&s.flipped(bit)).unwrap(), "k={k} q={q}");
            assert!(delta.total <= delta.denom);
        }
    }
}

#[test]
fn quantized_totals_stay_in_range() {
    let mut rng = rng_from_seed(3);
    for &(k, q) in &CELLS {
        let inst = Instance::generate(64, k, Quantization::Levels(q), 5).unwrap();
        for _ in 0..200 {
            let f = inst.evaluate(&BitString::random(64, &mut rng));
            assert_eq!(f.denom, 64 * (q as u64 - 1));
            assert!(f.total <= f.denom);
        }
    }
}

#[test]
fn separable_neutral_degree_is_half_the_bits() {
    // With k = 0 a flip re-draws one component, so every solution has the
    // same degree: the number of rows whose two table entries agree.
    let agreeing = |inst: &Instance| (0..64).filter(|&i| inst.table(i)[0] == inst.table(i)[1]).count() as f64;
    let inst = Instance::generate(64, 0, Quantization::Levels(2), 9).unwrap();
    let stats = inst.sample_neutral_degree(10_000, 4).unwrap();
    assert_eq!(stats.mean, agreeing(&inst));
    assert_eq!(stats.stddev, 0.0);

    // Over instances that count is Binomial(64, 1/2), with standard deviation 4.
    let instances = 400;
    let mean = (0..instances)
        .map(|seed| agreeing(&Instance::generate(64, 0, Quantization::Levels(2), seed).unwrap()))
        .sum::<f64>()
        / instances as f64;
    let standard_error = 4.0 / (instances as f64).sqrt();
    assert!((mean - 32.0).abs() < 3.0 * standard_error, "{mean}");
}

fn brute_force_auc(arms: &[ArmStats]) -> Vec<f64> {
    arms.iter()
        .enumerate()
        .map(|(i, arm)| {
            let rest: Vec<u64> = arms
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, a)| a.history.iter().copied())
                .collect();
            if arm.history.is_empty() || rest.is_empty() {
                return 0.5;
            }
            let mut score = 0.0;
            for &x in &arm.history {
                for &y in &rest {
                    if x > y {
                        score += 1.0;
                    } else if x == y {
                        score += 0.5;
                    }
                }
            }
            score / (arm.history.len() * rest.len()) as f64
        })
        .collect()
}

fn arms_strategy() -> impl Strategy<Value = Vec<(Vec<u64>, bool)>> {
    prop::collection::vec((prop::collection::vec(0u64..12, 0..9), prop::bool::weighted(0.8)), 1..7)
}

fn to_state(raw: &[(Vec<u64>, bool)], c: f64) -> BanditState {
    BanditState {
        arms: raw
            .iter()
            .enumerate()
            .map(|(arm_id, (history, eligible))| ArmStats {
                arm_id,
                history: history.clone(),
                eligible: *eligible,
            })
            .collect(),
        c,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn auc_equals_pair_counting(raw in arms_strategy()) {
        let state = to_state(&raw, 1.0);
        prop_assert_eq!(auc_rewards(&state.arms), brute_force_auc(&state.arms));
    }

    #[test]
    fn rewards_ignore_monotone_transforms(raw in arms_strategy(), seed in any::<u64>(), c in 0.0f64..3.0) {
        let state = to_state(&raw, c);
        let cubed = BanditState {
            arms: state
                .arms
                .iter()
                .map(|a| ArmStats { history: a.history.iter().map(|v| v * v * v).collect(), ..a.clone() })
                .collect(),
            c,
        };
        prop_assert_eq!(auc_rewards(&state.arms), auc_rewards(&cubed.arms));
        prop_assert_eq!(ucb_scores(&state), ucb_scores(&cubed));
        let a = select(&state, &mut rng_from_seed(seed));
        let b = select(&cubed, &mut rng_from_seed(seed));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn two_arm_rewards_are_complementary(a in prop::collection::vec(0u64..6, 1..10), b in prop::collection::vec(0u64..6, 1..10)) {
        let state = to_state(&[(a, true), (b, true)], 0.0);
        let r = auc_rewards(&state.arms);
        prop_assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
        prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scores_match_the_formula(raw in arms_strategy(), c in 0.0f64..10.0) {
        let state = to_state(&raw, c);
        let scores = ucb_scores(&state);
        let rewards = brute_force_auc(&state.arms);
        let total: usize = state.arms.iter().map(|a| a.history.len()).sum();
        for (i, arm) in state.arms.iter().enumerate() {
            let n = arm.history.len();
            if n == 0 {
                prop_assert_eq!(scores[i], f64::INFINITY);
            } else {
                let direct = rewards[i] + c * ((total as f64).ln() / n as f64).sqrt();
                prop_assert!((scores[i] - direct).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn large_c_picks_a_least_tried_arm(raw in arms_strategy(), seed in any::<u64>()) {
        let state = to_state(&raw, 500.0);
        if let Ok(picked) = select(&state, &mut rng_from_seed(seed)) {
            let least = state.arms.iter().filter(|a| a.eligible).map(|a| a.history.len()).min().unwrap();
            prop_assert!(state.arms[picked].eligible);
            prop_assert_eq!(state.arms[picked].history.len(), least);
        } else {
            prop_assert!(state.arms.iter().all(|a| !a.eligible));
        }
    }

    #[test]
    fn normalized_cells_have_zero_mean_and_unit_variance(values in prop::collection::vec(0.0f64..1.0, 2..200)) {
        let z = normalize_fitness(&values).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-12);
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > 1e-9 {
            prop_assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wilcoxon_is_antisymmetric(pairs in prop::collection::vec((0u32..20, 0u32..20), 1..60)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let a = wilcoxon_paired(&x, &y, 0.05).unwrap();
        let b = wilcoxon_paired(&y, &x, 0.05).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert_eq!(a.direction, b.direction.flipped());
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }
}

#[test]
fn neutrality_falls_with_k_and_q() {
    let mean = |k: usize, q: u32| {
        let mut total = 0.0;
        for seed in 1..=3 {
            let inst = Instance::generate(64, k, Quantization::Levels(q), seed).unwrap();
            total += inst.sample_neutral_degree(10_000, 7).unwrap().mean;
        }
        total / 3.0
    };
    let table: Vec<Vec<f64>> = [2u32, 3, 4]
        .iter()
        .map(|&q| [2usize, 4, 6, 8].iter().map(|&k| mean(k, q)).collect())
        .collect();
    for (qi, row) in table.iter().enumerate() {
        for ki in 0..4 {
            if ki + 1 < 4 {
                assert!(row[ki] > row[ki + 1], "q row {qi}: {row:?}");
            }
            if qi + 1 < 3 {
                assert!(row[ki] > table[qi + 1][ki], "k column {ki}: {table:?}");
            }
        }
    }
}
