use proptest::prelude::*;
use rand::SeedableRng;

use elitist_lab::algorithms::{jump_mixed_solver, AlgorithmId};
use elitist_lab::lab::{
    clopper_pearson, estimate_las_vegas, estimate_monte_carlo, final_phase_reference,
    loop_fraction, markov_mc_bound, run_trials, trial_seed, TrialConfig, TrialRecord,
};
use elitist_lab::model::GameObserver;
use elitist_lab::problems::{sample_instance, OneMaxInstance};
use elitist_lab::{
    run_game_observed, BitString, Error, Family, Fitness, GameRng, Policy, ProblemInstance,
};

fn record(i: usize, queries: u64, success: bool) -> TrialRecord {
    TrialRecord {
        trial_index: i as u64,
        seed: 0,
        queries,
        success,
        censored: !success,
        looped: false,
    }
}

#[test]
fn identical_configs_give_identical_records() {
    let config = TrialConfig::new(AlgorithmId::OnePlusOneEa, Family::DoubleOneMax, 16)
        .trials(64)
        .budget(20_000)
        .seed(42);
    let a = run_trials(&config).unwrap();
    let b = run_trials(&config).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().enumerate().all(|(i, r)| r.trial_index == i as u64));
    assert!(a.iter().all(|r| r.seed == trial_seed(42, r.trial_index)));
    let other = run_trials(&config.clone().seed(43)).unwrap();
    assert_ne!(a, other);
}

#[test]
fn records_do_not_depend_on_thread_count() {
    let config = TrialConfig::new(AlgorithmId::RlsRestart, Family::DoubleOneMax, 12)
        .trials(40)
        .budget(50_000)
        .seed(5);
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&config).unwrap())
    };
    assert_eq!(run_with(1), run_with(3));
}

#[test]
fn one_query_budget_is_censored() {
    let mut rng = GameRng::seed_from_u64(trial_seed(0, 0));
    // Find the start point trial 0 will use and aim the optimum elsewhere.
    let _ = sample_instance(Family::OneMax, 10, &mut rng).unwrap();
    let start = BitString::random(10, &mut rng);
    let inst = ProblemInstance::OneMax(OneMaxInstance::new(start.complement()).unwrap());
    let config = TrialConfig::new(AlgorithmId::Rls, Family::OneMax, 10)
        .trials(1)
        .budget(1)
        .seed(0)
        .instance(inst);
    let records = run_trials(&config).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].censored && !records[0].success);
    assert_eq!(records[0].queries, 1);
}

#[test]
fn invalid_configs_fail_before_running() {
    let base = TrialConfig::new(AlgorithmId::Rls, Family::OneMax, 10);
    assert!(matches!(
        base.clone().trials(0).prepare(),
        Err(Error::Config(_))
    ));
    assert!(base.clone().budget(0).prepare().is_err());
    let hp = TrialConfig::new(AlgorithmId::PathFollow, Family::HiddenPath, 30);
    assert!(run_trials(&hp).is_err());
    let jump = TrialConfig::new(AlgorithmId::JumpMixed, Family::Jump { k: 8 }, 16);
    assert!(jump.prepare().is_err());
    let inst = sample_instance(Family::OneMax, 8, &mut GameRng::seed_from_u64(0)).unwrap();
    assert!(base.clone().instance(inst).prepare().is_err());
}

#[test]
fn stuck_demo_loop_fraction() {
    let config = TrialConfig::new(AlgorithmId::StuckDemo, Family::OneMax, 16)
        .trials(2000)
        .budget(10_000)
        .seed(3);
    let records = run_trials(&config).unwrap();
    let looped = records.iter().filter(|r| r.looped).count() as u64;
    assert!(loop_fraction(&records) >= 0.25);
    let (lo, _) = clopper_pearson(looped, records.len() as u64, 0.05).unwrap();
    assert!(lo > 0.20);
    assert!(records.iter().filter(|r| r.looped).all(|r| r.censored));
}

#[test]
fn censored_mean_uses_spent_queries() {
    let records = vec![record(0, 10, true), record(1, 100, false)];
    let est = estimate_las_vegas::<f32>(&records).unwrap();
    assert_eq!(est.mean, 55.0);
    assert!(est.is_lower_bound && est.ci_low.is_none());
}

#[test]
fn final_phase_reference_values() {
    assert_eq!(final_phase_reference(16, 2, 1.0).unwrap().0, 560.0);
    let exact = final_phase_reference(6, 1, elitist_lab::Exact::from_integer(2.into())).unwrap();
    assert_eq!(exact.0, elitist_lab::Exact::from_integer(15.into()));
    assert_eq!(exact.1, elitist_lab::Exact::from_integer(1.into()));
}

/// Final phase of the jump solver: evaluations spent after the population
/// first reaches fitness `n - k - 1`.
struct FinalPhase {
    level: Fitness,
    from: Option<u64>,
    hit: Option<u64>,
}

impl GameObserver for FinalPhase {
    fn on_evaluation(&mut self, index: u64, _point: &BitString, _fitness: Fitness, optimal: bool) {
        if optimal {
            self.hit = Some(index);
        }
    }

    fn on_generation(&mut self, queries: u64, _population: &[BitString], fitness: &[Fitness]) {
        if self.from.is_none() && fitness[0] == self.level {
            self.from = Some(queries);
        }
    }
}

#[test]
fn final_phase_hit_rate_respects_binomial_bound() {
    for (n, k, trials) in [(12usize, 1usize, 600u64), (20, 3, 200)] {
        let policy = jump_mixed_solver(n, k).unwrap();
        let mode = policy.spec().default_mode();
        let (mut evals, mut hits) = (0u64, 0u64);
        for i in 0..trials {
            let mut rng = GameRng::seed_from_u64(trial_seed(77, i));
            let inst = sample_instance(Family::Jump { k }, n, &mut rng).unwrap();
            let mut phase = FinalPhase {
                level: Fitness((n - k - 1) as i64),
                from: None,
                hit: None,
            };
            run_game_observed(&policy, &inst, &mode, 10_000_000, &mut rng, &mut phase).unwrap();
            if let (Some(from), Some(hit)) = (phase.from, phase.hit) {
                evals += hit - from;
                hits += 1;
            }
        }
        let (bound, _) = final_phase_reference(n, k, 1.0).unwrap();
        let p0 = 1.0 / bound;
        let sigma = (p0 * (1.0 - p0) / evals as f64).sqrt();
        let freq = hits as f64 / evals as f64;
        assert!(
            freq <= p0 + 3.0 * sigma,
            "n={n} k={k}: {freq} > {p0} + 3 * {sigma}"
        );
    }
}

fn two_mode(fast: &[u64], slow: usize) -> Vec<TrialRecord> {
    fast.iter()
        .map(|&q| (q, true))
        .chain(std::iter::repeat_n((u64::MAX / 4, false), slow))
        .enumerate()
        .map(|(i, (q, s))| record(i, q, s))
        .collect()
}

proptest! {
    #[test]
    fn monte_carlo_t_is_monotone_in_p(
        times in proptest::collection::vec((1u64..500, proptest::bool::weighted(0.8)), 1..60)
    ) {
        let records: Vec<TrialRecord> = times
            .iter()
            .enumerate()
            .map(|(i, &(q, s))| record(i, q, s))
            .collect();
        let mut last = u64::MAX;
        for step in 1..50 {
            let est = estimate_monte_carlo(&records, step as f64 / 50.0, 500).unwrap();
            prop_assert!(est.t <= last);
            if est.achieved {
                prop_assert!(est.achieved_success_fraction >= 1.0 - step as f64 / 50.0 - 1e-9);
            }
            last = est.t;
        }
    }

    #[test]
    fn quantile_never_exceeds_markov_conversion(
        fast in proptest::collection::vec(1u64..10_000, 1..80),
        slow in 0usize..40,
        p_steps in 1usize..19,
    ) {
        let records = two_mode(&fast, slow);
        let total = records.len() as f64;
        let pe = slow as f64 / total;
        let p = pe + (1.0 - pe) * p_steps as f64 / 20.0;
        prop_assume!(p < 1.0 && p > pe);
        let conditional_mean = fast.iter().sum::<u64>() as f64 / fast.len() as f64;
        let bound = markov_mc_bound(conditional_mean, p, pe).unwrap();
        let est = estimate_monte_carlo(&records, p, u64::MAX / 8).unwrap();
        prop_assert!(est.achieved);
        prop_assert!(est.t as f64 <= bound + 1e-6, "T {} > bound {}", est.t, bound);
    }
}
