use std::collections::HashMap;

use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use elitist_lab::algorithms::{
    hidden_path_follower, jump_mixed_solver, one_plus_one_ea, restart_probability, rls, stuck_demo,
    AlgorithmId,
};
use elitist_lab::lab::{estimate_las_vegas, run_trials, success_fraction, TrialConfig};
use elitist_lab::model::{GameObserver, MoveKind, PolicySpec, ViewInfo};
use elitist_lab::problems::{
    sample_instance, DoubleOneMaxInstance, HiddenPathInstance, OneMaxInstance,
};
use elitist_lab::{
    run_game, run_game_observed, BitString, Error, Family, Fitness, FitnessView, GameRng, Policy,
    PopulationView, Problem, ProblemInstance,
};

fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

fn rng(seed: u64) -> GameRng {
    GameRng::seed_from_u64(seed)
}

/// Runs `inner` from a fixed start point.
struct StartAt<P> {
    inner: P,
    start: BitString,
}

impl<P: Policy> Policy for StartAt<P> {
    fn id(&self) -> &'static str {
        self.inner.id()
    }
    fn spec(&self) -> PolicySpec {
        self.inner.spec()
    }
    fn initial_point(
        &self,
        _view: &PopulationView<'_>,
        _n: usize,
        _rng: &mut GameRng,
    ) -> BitString {
        self.start.clone()
    }
    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        self.inner.propose(view, rng, out)
    }
    fn select(
        &self,
        parents: &PopulationView<'_>,
        kind: MoveKind,
        union: &PopulationView<'_>,
        rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        self.inner.select(parents, kind, union, rng, keep)
    }
}

#[derive(Default)]
struct Trace {
    evaluations: Vec<(BitString, Fitness)>,
    populations: Vec<Vec<BitString>>,
}

impl GameObserver for Trace {
    fn on_evaluation(&mut self, _index: u64, point: &BitString, fitness: Fitness, _optimal: bool) {
        self.evaluations.push((point.clone(), fitness));
    }
    fn on_generation(&mut self, _queries: u64, population: &[BitString], _fitness: &[Fitness]) {
        self.populations.push(population.to_vec());
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

/// Expected evaluations of the (1+1) EA with rate 1/n on OneMax from a
/// uniform start, from the Markov chain on the number of wrong bits.
fn ea_onemax_oracle(n: usize) -> f64 {
    let p = 1.0 / n as f64;
    let choose = |a: usize, b: usize| if b > a { 0.0 } else { ln_choose(a, b).exp() };
    let mut expected = vec![0.0f64; n + 1];
    for i in 1..=n {
        // probability of moving to i - t wrong bits, t >= 1
        let mut down = vec![0.0f64; i + 1];
        for a in 1..=i {
            for b in 0..a.min(n - i + 1) {
                let flips = (a + b) as i32;
                down[a - b] += choose(i, a)
                    * choose(n - i, b)
                    * p.powi(flips)
                    * (1.0 - p).powi(n as i32 - flips);
            }
        }
        let leave: f64 = down.iter().sum();
        let carry: f64 = (1..=i).map(|t| down[t] * expected[i - t]).sum();
        expected[i] = (1.0 + carry) / leave;
    }
    let start: f64 = (0..=n)
        .map(|i| (ln_choose(n, i) - n as f64 * 2f64.ln()).exp() * expected[i])
        .sum();
    1.0 + start
}

#[test]
fn rls_single_bit_needs_at_most_two_evaluations() {
    let policy = rls(1).unwrap();
    let mode = policy.spec().default_mode();
    let inst = OneMaxInstance::new(bs("1")).unwrap();
    let mut counts = HashMap::new();
    for seed in 0..40 {
        let out = run_game(&policy, &inst, &mode, 10, &mut rng(seed)).unwrap();
        *counts.entry(out.total_queries).or_insert(0) += 1;
    }
    assert_eq!(counts.keys().copied().max(), Some(2));
    assert!(counts.contains_key(&1) && counts.contains_key(&2));

    let fixed = StartAt {
        inner: rls(1).unwrap(),
        start: bs("0"),
    };
    let out = run_game(&fixed, &inst, &mode, 10, &mut rng(0)).unwrap();
    assert_eq!(out.queries_to_optimum, Some(2));
}

#[test]
fn rls_trapped_at_second_peak_never_moves() {
    let inst = DoubleOneMaxInstance::new(bs("11110000"), bs("00001111")).unwrap();
    let policy = StartAt {
        inner: rls(8).unwrap(),
        start: bs("00001111"),
    };
    let mode = policy.spec().default_mode();
    let mut trace = Trace::default();
    let out = run_game_observed(&policy, &inst, &mode, 5_000, &mut rng(1), &mut trace).unwrap();
    assert!(!out.success);
    assert!(trace.populations.iter().all(|p| p == &[bs("00001111")]));
    assert!(trace.evaluations[1..].iter().all(|(_, f)| f.0 < 8));
}

#[test]
fn double_onemax_runs_succeed_or_end_at_z2() {
    let config = TrialConfig::new(AlgorithmId::Rls, Family::DoubleOneMax, 12)
        .trials(300)
        .budget(20_000)
        .seed(9);
    for r in elitist_lab::lab::run_trials_detailed(&config).unwrap() {
        if !r.record.success {
            let ProblemInstance::DoubleOneMax(inst) = &r.instance else {
                unreachable!()
            };
            assert_eq!(r.outcome.final_population, [inst.z2().clone()]);
        }
    }
}

#[test]
fn restart_probability_formula() {
    let p = restart_probability(32).unwrap();
    assert!((p - 9.016e-4).abs() < 1e-6, "{p}");
    assert_eq!(
        restart_probability(2).unwrap(),
        (1.0 / (20.0 * 2f64.ln())).min(1.0)
    );
    assert!(restart_probability(1).is_err());
}

#[test]
fn restarts_still_solve_onemax() {
    let config = TrialConfig::new(AlgorithmId::RlsRestart, Family::OneMax, 32)
        .trials(200)
        .budget(100_000)
        .seed(3);
    assert_eq!(success_fraction(&run_trials(&config).unwrap()), 1.0);
}

#[test]
fn ea_on_one_bit_is_rls() {
    let ea = one_plus_one_ea(1).unwrap();
    assert_eq!(ea.operator().radial(), &[0.0, 1.0]);
}

#[test]
fn ea_onemax_matches_chain_oracle() {
    let config = TrialConfig::new(AlgorithmId::OnePlusOneEa, Family::OneMax, 64)
        .trials(2000)
        .budget(1_000_000)
        .seed(11);
    let est = estimate_las_vegas::<f64>(&run_trials(&config).unwrap()).unwrap();
    let oracle = ea_onemax_oracle(64);
    assert!(
        (est.mean / oracle - 1.0).abs() < 0.05,
        "{} vs {oracle}",
        est.mean
    );
    let reference = std::f64::consts::E * 64.0 * 64f64.ln();
    assert!((0.75..=3.0).contains(&(est.mean / reference)));
}

#[test]
fn ea_solves_small_jump() {
    let config = TrialConfig::new(AlgorithmId::OnePlusOneEa, Family::Jump { k: 1 }, 12)
        .trials(100)
        .budget(12u64.pow(3))
        .seed(5);
    assert!(success_fraction(&run_trials(&config).unwrap()) > 0.0);
}

fn hidden_path(n: usize, seed: u64) -> HiddenPathInstance {
    match sample_instance(Family::HiddenPath, n, &mut rng(seed)).unwrap() {
        ProblemInstance::HiddenPath(h) => h,
        _ => unreachable!(),
    }
}

#[test]
fn follower_jumps_from_local_optimum_to_path_start() {
    let inst = hidden_path(16, 2);
    let policy = StartAt {
        inner: hidden_path_follower(16).unwrap(),
        start: inst.z().clone(),
    };
    let mode = policy.spec().default_mode();
    let mut trace = Trace::default();
    run_game_observed(&policy, &inst, &mode, 2, &mut rng(0), &mut trace).unwrap();
    assert_eq!(trace.evaluations[1], (inst.path()[0].clone(), Fitness(0)));
    assert_eq!(trace.populations[1], [inst.path()[0].clone()]);
}

fn follower_accepts(
    policy: &impl Policy,
    x: &BitString,
    y: &BitString,
    f: &impl Problem,
    kind: MoveKind,
) -> bool {
    let members = [x.clone(), y.clone()];
    let fitness = [f.fitness(x), f.fitness(y)];
    let union = PopulationView {
        members: &members,
        info: ViewInfo::Absolute(&fitness),
    };
    let parents = PopulationView {
        members: &members[..1],
        info: ViewInfo::Absolute(&fitness[..1]),
    };
    let mut keep = Vec::new();
    policy.select(&parents, kind, &union, &mut rng(0), &mut keep);
    keep == [1]
}

#[test]
fn follower_on_path_accepts_only_the_next_point() {
    let n = 16;
    let inst = hidden_path(n, 4);
    let policy = hidden_path_follower(n).unwrap();
    let path = inst.path();
    for (j, zj) in path[..path.len() - 1].iter().enumerate() {
        let accepted: Vec<BitString> = (0..n)
            .map(|i| zj.flipped(i))
            .filter(|y| follower_accepts(&policy, zj, y, &inst, MoveKind::Variation))
            .collect();
        assert_eq!(accepted, [path[j + 1].clone()], "at z^{j}");
        // nothing in [n, 2n] is ever accepted from the path
        for i in 0..n {
            let y = zj.flipped(i);
            let fy = inst.fitness(&y).0;
            if (n as i64..=2 * n as i64).contains(&fy) {
                assert!(!follower_accepts(
                    &policy,
                    zj,
                    &y,
                    &inst,
                    MoveKind::Variation
                ));
            }
        }
    }
}

#[test]
fn follower_always_succeeds() {
    let run = |n| {
        let config = TrialConfig::new(AlgorithmId::PathFollow, Family::HiddenPath, n)
            .trials(200)
            .budget(1_000_000)
            .seed(21);
        run_trials(&config).unwrap()
    };
    let (a, b) = (run(16), run(32));
    assert_eq!(success_fraction(&a), 1.0);
    assert_eq!(success_fraction(&b), 1.0);
}

#[test]
fn two_plus_one_follower_success_rate() {
    let config = TrialConfig::new(AlgorithmId::PathFollow2p1, Family::HiddenPath, 32)
        .trials(500)
        .budget(1_000_000)
        .seed(31);
    assert!(success_fraction(&run_trials(&config).unwrap()) >= 0.99);
}

#[test]
fn two_plus_one_follower_runs_without_absolute_values() {
    let config = TrialConfig::new(AlgorithmId::PathFollow2p1, Family::HiddenPath, 16)
        .trials(50)
        .seed(2)
        .fitness_view(FitnessView::Ranking);
    assert!(config.prepare().is_ok());
    let comparison = config.clone().fitness_view(FitnessView::Comparison);
    assert!(comparison.prepare().is_err());
}

#[test]
fn path_followers_need_hidden_path() {
    let config = TrialConfig::new(AlgorithmId::PathFollow, Family::OneMax, 16);
    assert!(matches!(config.prepare(), Err(Error::Config(_))));
}

#[test]
fn jump_mixed_checks_k() {
    let policy = jump_mixed_solver(16, 2).unwrap();
    let mode = policy.spec().default_mode();
    let wrong = sample_instance(Family::Jump { k: 3 }, 16, &mut rng(0)).unwrap();
    assert!(matches!(
        run_game(&policy, &wrong, &mode, 10, &mut rng(0)),
        Err(Error::Config(_))
    ));
    let onemax = sample_instance(Family::OneMax, 16, &mut rng(0)).unwrap();
    assert!(run_game(&policy, &onemax, &mode, 10, &mut rng(0)).is_err());
    assert!(AlgorithmId::JumpMixed.build(16, None).is_err());
}

#[test]
fn jump_mixed_with_k_zero_solves() {
    let config = TrialConfig::new(AlgorithmId::JumpMixed, Family::Jump { k: 0 }, 20)
        .trials(100)
        .budget(100_000)
        .seed(8);
    assert_eq!(success_fraction(&run_trials(&config).unwrap()), 1.0);
}

#[test]
fn stuck_demo_loops_when_first_flip_worsens() {
    let policy = stuck_demo();
    let mode = policy.spec().default_mode();
    // z_0 = 0: the very first offspring is worse
    let inst = OneMaxInstance::new(bs("0111")).unwrap();
    let out = run_game(&policy, &inst, &mode, 100, &mut rng(0)).unwrap();
    assert!(out.looped);
    assert_eq!(out.total_queries, 3);
}

#[test]
fn stuck_demo_never_loops_on_one_bit() {
    let config = TrialConfig::new(AlgorithmId::StuckDemo, Family::OneMax, 1)
        .trials(50)
        .budget(100)
        .seed(1);
    let records = run_trials(&config).unwrap();
    assert!(records.iter().all(|r| r.success && !r.looped));
}

#[test]
fn registry_round_trip_and_mode_audit() {
    for id in AlgorithmId::ALL {
        assert_eq!(id.as_str().parse::<AlgorithmId>().unwrap(), id);
        let n = 16;
        let policy = id.build(n, Some(2)).unwrap();
        assert_eq!(policy.id(), id.as_str());
        let spec = policy.spec();
        spec.check_mode(&spec.default_mode()).unwrap();
        for &view in spec.views {
            let mut mode = spec.default_mode();
            mode.fitness_view = view;
            spec.check_mode(&mode).unwrap();
        }
        let mut flipped = spec.default_mode();
        flipped.elitist = !flipped.elitist;
        assert!(spec.check_mode(&flipped).is_err());
        if spec.views.contains(&FitnessView::Comparison) {
            assert_eq!((spec.mu, spec.lambda), (1, 1));
        }
    }
    assert!("hill-climb".parse::<AlgorithmId>().is_err());
    assert!(!stuck_demo().spec().unbiased && stuck_demo().spec().deterministic);
}

#[test]
fn unbiased_proposals_are_uniform_given_distance() {
    let n = 6;
    let onemax = OneMaxInstance::new(bs("101100")).unwrap();
    for id in [
        AlgorithmId::Rls,
        AlgorithmId::OnePlusOneEa,
        AlgorithmId::JumpMixed,
    ] {
        let policy = id.build(n, Some(1)).unwrap();
        let mut pairs = Vec::new();
        let mut r = rng(17);
        // propose directly from many random parents
        for _ in 0..60_000 {
            let x = BitString::random(n, &mut r);
            let fitness = [onemax.fitness(&x)];
            let members = [x.clone()];
            let view = PopulationView {
                members: &members,
                info: ViewInfo::Absolute(&fitness),
            };
            let mut out = Vec::new();
            policy.propose(&view, &mut r, &mut out);
            pairs.push((x, out.pop().unwrap()));
        }
        let mut by_mask: HashMap<usize, HashMap<BitString, u64>> = HashMap::new();
        for (x, y) in &pairs {
            let mask = x.xor(y).unwrap();
            *by_mask
                .entry(mask.count_ones())
                .or_default()
                .entry(mask)
                .or_default() += 1;
        }
        for (d, masks) in by_mask {
            let cells = ln_choose(n, d).exp().round() as usize;
            if cells < 2 {
                continue;
            }
            let total: u64 = masks.values().sum();
            let expected = total as f64 / cells as f64;
            if expected < 20.0 {
                continue;
            }
            assert_eq!(masks.len(), cells, "{id} misses masks at distance {d}");
            let stat: f64 = masks
                .values()
                .map(|&o| (o as f64 - expected).powi(2) / expected)
                .sum();
            let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
            assert!(p > 1e-3, "{id} distance {d}: p = {p}");
        }
    }
}
