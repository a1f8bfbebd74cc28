//! Batch trials and runtime estimators.
//!
//! Trials are seeded by [`trial_seed`] and may run in parallel; records come
//! back sorted by trial index, so results never depend on scheduling.

use num_traits::{Float, Num};
use rand::SeedableRng;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::algorithms::{AlgorithmId, AnyPolicy};
use crate::error::{Error, Result};
use crate::model::{run_game, FitnessView, GameRng, ModelMode, Policy, RunOutcome, TiePolicy};
use crate::problems::{sample_instance, Family, Problem, ProblemInstance};
use crate::scalar::{binomial, Weight};

/// One finished trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    /// Evaluations until the first optimum, or all evaluations spent.
    pub queries: u64,
    pub success: bool,
    /// No optimum was evaluated: the budget ran out or the run looped.
    pub censored: bool,
    pub looped: bool,
}

impl TrialRecord {
    pub fn from_outcome(trial_index: u64, seed: u64, outcome: &RunOutcome) -> Self {
        TrialRecord {
            trial_index,
            seed,
            queries: outcome.queries_to_optimum.unwrap_or(outcome.total_queries),
            success: outcome.success,
            censored: !outcome.success,
            looped: outcome.looped,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `index`: two rounds of splitmix64 over the master seed and
/// the index.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

/// Everything that determines a batch of trials.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub algorithm: AlgorithmId,
    pub family: Family,
    pub n: usize,
    pub trials: u64,
    pub budget: u64,
    pub master_seed: u64,
    /// Overrides the policy's default view.
    pub fitness_view: Option<FitnessView>,
    pub tie_policy: TiePolicy,
    /// Play every trial on this instance instead of sampling one per trial.
    pub instance: Option<ProblemInstance>,
}

impl TrialConfig {
    pub fn new(algorithm: AlgorithmId, family: Family, n: usize) -> Self {
        TrialConfig {
            algorithm,
            family,
            n,
            trials: 100,
            budget: 1_000_000,
            master_seed: 0,
            fitness_view: None,
            tie_policy: TiePolicy::default(),
            instance: None,
        }
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn fitness_view(mut self, view: FitnessView) -> Self {
        self.fitness_view = Some(view);
        self
    }

    pub fn tie_policy(mut self, tie: TiePolicy) -> Self {
        self.tie_policy = tie;
        self
    }

    pub fn instance(mut self, instance: ProblemInstance) -> Self {
        self.instance = Some(instance);
        self
    }

    /// Checks the whole configuration and builds the policy and mode,
    /// without running anything.
    pub fn prepare(&self) -> Result<(AnyPolicy, ModelMode)> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        self.family.validate(self.n)?;
        if let Some(inst) = &self.instance {
            if inst.n() != self.n || inst.family_kind() != self.family {
                return Err(Error::Config(format!(
                    "fixed instance is {} with n = {}, config says {} with n = {}",
                    inst.family_kind(),
                    inst.n(),
                    self.family,
                    self.n
                )));
            }
        }
        let policy = self.algorithm.build(self.n, self.family.k())?;
        policy.check_family(Some(self.family))?;
        let mut mode = policy
            .spec()
            .default_mode()
            .with_tie_policy(self.tie_policy);
        if let Some(view) = self.fitness_view {
            mode.fitness_view = view;
        }
        policy.spec().check_mode(&mode)?;
        Ok((policy, mode))
    }
}

/// A record together with the full outcome and the instance it was run on.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub record: TrialRecord,
    pub outcome: RunOutcome,
    pub instance: ProblemInstance,
}

fn run_one(
    config: &TrialConfig,
    policy: &AnyPolicy,
    mode: &ModelMode,
    index: u64,
) -> Result<TrialResult> {
    let seed = trial_seed(config.master_seed, index);
    let mut rng = GameRng::seed_from_u64(seed);
    let instance = match &config.instance {
        Some(inst) => inst.clone(),
        None => sample_instance(config.family, config.n, &mut rng)?,
    };
    let outcome = run_game(policy, &instance, mode, config.budget, &mut rng)?;
    Ok(TrialResult {
        record: TrialRecord::from_outcome(index, seed, &outcome),
        outcome,
        instance,
    })
}

/// Runs all trials on the current rayon pool and keeps full outcomes.
pub fn run_trials_detailed(config: &TrialConfig) -> Result<Vec<TrialResult>> {
    let (policy, mode) = config.prepare()?;
    (0..config.trials)
        .into_par_iter()
        .map(|i| run_one(config, &policy, &mode, i))
        .collect()
}

/// Runs all trials and returns their records sorted by trial index.
pub fn run_trials(config: &TrialConfig) -> Result<Vec<TrialRecord>> {
    let (policy, mode) = config.prepare()?;
    (0..config.trials)
        .into_par_iter()
        .map(|i| run_one(config, &policy, &mode, i).map(|r| r.record))
        .collect()
}

/// Mean runtime. With censored records the mean is a lower bound and no
/// interval is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LasVegasEstimate<F> {
    pub mean: F,
    pub ci_low: Option<F>,
    pub ci_high: Option<F>,
    pub trials: usize,
    pub censored_count: usize,
    pub is_lower_bound: bool,
}

const Z_975: f64 = 1.959_963_984_540_054;

pub fn estimate_las_vegas<F: Float>(records: &[TrialRecord]) -> Result<LasVegasEstimate<F>> {
    if records.is_empty() {
        return Err(Error::Estimator("no records".into()));
    }
    let count = F::from(records.len()).unwrap();
    let values = || records.iter().map(|r| F::from(r.queries).unwrap());
    let mean = values().fold(F::zero(), |a, b| a + b) / count;
    let censored_count = records.iter().filter(|r| r.censored).count();
    let (ci_low, ci_high) = if censored_count == 0 && records.len() > 1 {
        let ss = values().fold(F::zero(), |a, v| a + (v - mean) * (v - mean));
        let sd = (ss / (count - F::one())).sqrt();
        let half = F::from(Z_975).unwrap() * sd / count.sqrt();
        (Some(mean - half), Some(mean + half))
    } else if censored_count == 0 {
        (Some(mean), Some(mean))
    } else {
        (None, None)
    };
    Ok(LasVegasEstimate {
        mean,
        ci_low,
        ci_high,
        trials: records.len(),
        censored_count,
        is_lower_bound: censored_count > 0,
    })
}

/// Smallest evaluation count reaching success fraction `1 - p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate<F> {
    pub p: F,
    pub t: u64,
    pub achieved_success_fraction: F,
    /// False when the fraction `1 - p` is out of reach within the budget;
    /// `t` is then the budget.
    pub achieved: bool,
}

impl<F> MonteCarloEstimate<F> {
    pub fn not_achieved(&self) -> bool {
        !self.achieved
    }
}

/// Relative slack when turning `(1 - p) * N` into a count, so that e.g.
/// `0.9 * 10` counts as 9 and not 10.
const COUNT_SLACK: f64 = 1e-9;

pub fn estimate_monte_carlo<F: Float>(
    records: &[TrialRecord],
    p: F,
    budget: u64,
) -> Result<MonteCarloEstimate<F>> {
    if records.is_empty() {
        return Err(Error::Estimator("no records".into()));
    }
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::Estimator(
            "p must lie strictly between 0 and 1".into(),
        ));
    }
    let total = records.len();
    let target = (F::one() - p) * F::from(total).unwrap();
    let need = (target * F::from(1.0 - COUNT_SLACK).unwrap())
        .ceil()
        .to_usize()
        .unwrap_or(total);
    let mut times: Vec<u64> = records
        .iter()
        .filter(|r| r.success && r.queries <= budget)
        .map(|r| r.queries)
        .collect();
    times.sort_unstable();
    let fraction = |hits: usize| F::from(hits).unwrap() / F::from(total).unwrap();
    if need == 0 {
        return Ok(MonteCarloEstimate {
            p,
            t: 0,
            achieved_success_fraction: F::zero(),
            achieved: true,
        });
    }
    if times.len() >= need {
        let t = times[need - 1];
        let hits = times.partition_point(|&q| q <= t);
        Ok(MonteCarloEstimate {
            p,
            t,
            achieved_success_fraction: fraction(hits),
            achieved: true,
        })
    } else {
        Ok(MonteCarloEstimate {
            p,
            t: budget,
            achieved_success_fraction: fraction(times.len()),
            achieved: false,
        })
    }
}

/// `(1 - pe) * t / (p - pe)`: a Las Vegas bound from a p-Monte Carlo
/// runtime `t` when failures are detectable with probability `1 - pe`.
pub fn markov_mc_bound<T>(t: T, p: T, pe: T) -> Result<T>
where
    T: Num + PartialOrd + Clone,
{
    if !(T::zero() <= pe.clone() && pe < p && p < T::one()) {
        return Err(Error::Estimator("need 0 <= pe < p < 1".into()));
    }
    if t < T::zero() {
        return Err(Error::Estimator("t must be non-negative".into()));
    }
    Ok((T::one() - pe.clone()) * t / (p - pe))
}

/// Reference values for a final phase at distance `d`: the expected
/// additional queries are at least `C(n, d + 1)` and the success
/// probability is capped at `min(alpha, 1)`.
pub fn final_phase_reference<T: Weight>(n: usize, d: usize, alpha: T) -> Result<(T, T)> {
    if d == 0 || 2 * d > n {
        return Err(Error::Estimator(format!(
            "need 0 < d <= n/2, got d = {d}, n = {n}"
        )));
    }
    if alpha < T::zero() {
        return Err(Error::Estimator("alpha must be non-negative".into()));
    }
    let prob = if alpha > T::one() { T::one() } else { alpha };
    Ok((binomial::<T>(n, d + 1), prob))
}

/// Exact (Clopper–Pearson) two-sided interval for `successes` out of
/// `trials` at level `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::Estimator(format!(
            "{successes} successes out of {trials} trials"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Estimator(
            "alpha must lie strictly between 0 and 1".into(),
        ));
    }
    let (x, n) = (successes as f64, trials as f64);
    let beta = |a: f64, b: f64, q: f64| -> Result<f64> {
        Beta::new(a, b)
            .map(|d| d.inverse_cdf(q))
            .map_err(|e| Error::Estimator(e.to_string()))
    };
    let low = if successes == 0 {
        0.0
    } else {
        beta(x, n - x + 1.0, alpha / 2.0)?
    };
    let high = if successes == trials {
        1.0
    } else {
        beta(x + 1.0, n - x, 1.0 - alpha / 2.0)?
    };
    Ok((low, high))
}

/// Fraction of records that looped.
pub fn loop_fraction(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.looped).count() as f64 / records.len() as f64
}

pub fn success_fraction(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.success).count() as f64 / records.len() as f64
}
