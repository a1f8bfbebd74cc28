use std::collections::HashSet;

use rand_chacha::ChaCha8Rng;

use super::select::{child_survives, elitist_select_indices};
use super::{rank_into, Comparison, Fitness, FitnessView, ModelMode, PopulationView, ViewInfo};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::problems::{Family, Problem};

/// Random source handed to policies. Seeded per trial.
pub type GameRng = ChaCha8Rng;

/// Tag a policy attaches to an offspring batch so its own acceptance rule
/// can tell the move apart. It carries no information about the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Variation,
    Restart,
    Complement,
}

/// What a policy declares about itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicySpec {
    pub mu: usize,
    pub lambda: usize,
    /// Views the policy can operate under.
    pub views: &'static [FitnessView],
    /// True when acceptance is elitist truncation; false for a custom rule.
    pub elitist: bool,
    pub unbiased: bool,
    /// Proposals are a function of the view alone.
    pub deterministic: bool,
}

impl PolicySpec {
    /// The mode this policy runs in when nothing is overridden.
    pub fn default_mode(&self) -> ModelMode {
        ModelMode {
            mu: self.mu,
            lambda: self.lambda,
            fitness_view: self.views[0],
            elitist: self.elitist,
            unbiased: self.unbiased,
            tie_policy: Default::default(),
        }
    }

    pub fn check_mode(&self, mode: &ModelMode) -> Result<()> {
        mode.validate()?;
        if mode.mu != self.mu || mode.lambda != self.lambda {
            return Err(Error::Config(format!(
                "policy is ({}+{}) but mode is ({}+{})",
                self.mu, self.lambda, mode.mu, mode.lambda
            )));
        }
        if !self.views.contains(&mode.fitness_view) {
            return Err(Error::Config(format!(
                "policy cannot run under the {} view",
                mode.fitness_view
            )));
        }
        if mode.elitist != self.elitist {
            return Err(Error::Config(if mode.elitist {
                "elitist mode requires truncation acceptance".into()
            } else {
                "policy uses elitist acceptance but mode is non-elitist".into()
            }));
        }
        if mode.unbiased && !self.unbiased {
            return Err(Error::Config("policy is not unbiased".into()));
        }
        Ok(())
    }
}

/// An algorithm expressed against the black-box game.
///
/// Every method sees only a [`PopulationView`]; per-run state beyond the
/// population is not available.
pub trait Policy: Sync {
    fn id(&self) -> &'static str;

    fn spec(&self) -> PolicySpec;

    /// Rejects instance families the policy is not built for.
    fn check_family(&self, _family: Option<Family>) -> Result<()> {
        Ok(())
    }

    /// The next initial point, given the partial population so far.
    fn initial_point(&self, view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString;

    /// Writes one batch of `lambda` offspring into `out` (empty on entry).
    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind;

    /// Custom acceptance for non-elitist policies. `union` lists the parents
    /// followed by the offspring; returns the `mu` indices to keep.
    fn select(
        &self,
        _parents: &PopulationView<'_>,
        _kind: MoveKind,
        _union: &PopulationView<'_>,
        _rng: &mut GameRng,
        _keep: &mut Vec<usize>,
    ) {
        unreachable!("select is only called for non-elitist policies")
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn id(&self) -> &'static str {
        (**self).id()
    }
    fn spec(&self) -> PolicySpec {
        (**self).spec()
    }
    fn check_family(&self, family: Option<Family>) -> Result<()> {
        (**self).check_family(family)
    }
    fn initial_point(&self, view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        (**self).initial_point(view, n, rng)
    }
    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        (**self).propose(view, rng, out)
    }
    fn select(
        &self,
        parents: &PopulationView<'_>,
        kind: MoveKind,
        union: &PopulationView<'_>,
        rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        (**self).select(parents, kind, union, rng, keep)
    }
}

/// Hooks for instrumentation. Observers see hidden fitness values; policies
/// never do.
pub trait GameObserver {
    fn on_evaluation(
        &mut self,
        _index: u64,
        _point: &BitString,
        _fitness: Fitness,
        _optimal: bool,
    ) {
    }

    /// Called after initialization and after every selection.
    fn on_generation(&mut self, _queries: u64, _population: &[BitString], _fitness: &[Fitness]) {}
}

pub struct NoObserver;

impl GameObserver for NoObserver {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// Index (1-based) of the first evaluation of an optimum.
    pub queries_to_optimum: Option<u64>,
    pub total_queries: u64,
    pub success: bool,
    /// A deterministic policy revisited a state without accepting anything.
    pub looped: bool,
    pub final_population: Vec<BitString>,
    pub final_fitness: Vec<Fitness>,
}

/// Plays `policy` against `problem` until an optimum is evaluated, the
/// budget is spent, or a deterministic policy is caught in a loop.
pub fn run_game<P, Q>(
    policy: &P,
    problem: &Q,
    mode: &ModelMode,
    budget: u64,
    rng: &mut GameRng,
) -> Result<RunOutcome>
where
    P: Policy + ?Sized,
    Q: Problem + ?Sized,
{
    run_game_observed(policy, problem, mode, budget, rng, &mut NoObserver)
}

struct Evaluator<'a, Q: ?Sized, O> {
    problem: &'a Q,
    optimum: Fitness,
    budget: u64,
    queries: u64,
    hit: Option<u64>,
    observer: &'a mut O,
}

impl<Q: Problem + ?Sized, O: GameObserver> Evaluator<'_, Q, O> {
    /// Returns `None` once the run must stop.
    #[inline]
    fn eval(&mut self, x: &BitString) -> Result<Option<Fitness>> {
        if self.hit.is_some() || self.queries >= self.budget {
            return Ok(None);
        }
        if x.len() != self.problem.n() {
            return Err(Error::Policy(format!(
                "proposed a point of length {} for n = {}",
                x.len(),
                self.problem.n()
            )));
        }
        self.queries += 1;
        let f = self.problem.fitness(x);
        let optimal = f == self.optimum;
        self.observer.on_evaluation(self.queries, x, f, optimal);
        if optimal {
            self.hit = Some(self.queries);
        }
        Ok(Some(f))
    }

    fn stopped(&self) -> bool {
        self.hit.is_some() || self.queries >= self.budget
    }
}

struct ViewBuffers {
    ranks: Vec<u32>,
    union_ranks: Vec<u32>,
}

fn make_view<'a>(
    view: FitnessView,
    members: &'a [BitString],
    fitness: &'a [Fitness],
    ranks: &'a mut Vec<u32>,
    comparison: Option<Comparison>,
) -> PopulationView<'a> {
    let info = match view {
        FitnessView::Absolute => ViewInfo::Absolute(fitness),
        FitnessView::Ranking => {
            rank_into(fitness, ranks);
            ViewInfo::Ranking(ranks)
        }
        FitnessView::Comparison => ViewInfo::Comparison(comparison),
    };
    PopulationView { members, info }
}

fn state_key(
    view: FitnessView,
    members: &[BitString],
    fitness: &[Fitness],
    comparison: Option<Comparison>,
) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[a].cmp(&members[b]));
    let mut pop = Vec::new();
    for &i in &order {
        pop.extend_from_slice(members[i].words());
    }
    let mut info = Vec::new();
    match view {
        FitnessView::Absolute => info.extend(order.iter().map(|&i| fitness[i].0 as u64)),
        FitnessView::Ranking => {
            let mut ranks = Vec::new();
            rank_into(fitness, &mut ranks);
            info.extend(order.iter().map(|&i| u64::from(ranks[i])));
        }
        FitnessView::Comparison => info.push(match comparison {
            None => 0,
            Some(Comparison::Worse) => 1,
            Some(Comparison::Equal) => 2,
            Some(Comparison::Better) => 3,
        }),
    }
    (pop, info)
}

/// [`run_game`] with instrumentation hooks.
pub fn run_game_observed<P, Q, O>(
    policy: &P,
    problem: &Q,
    mode: &ModelMode,
    budget: u64,
    rng: &mut GameRng,
    observer: &mut O,
) -> Result<RunOutcome>
where
    P: Policy + ?Sized,
    Q: Problem + ?Sized,
    O: GameObserver,
{
    let spec = policy.spec();
    spec.check_mode(mode)?;
    policy.check_family(problem.family())?;
    if budget == 0 {
        return Err(Error::Config("budget must be positive".into()));
    }

    let n = problem.n();
    let (mu, lambda) = (mode.mu, mode.lambda);
    let view = mode.fitness_view;
    let mut eval = Evaluator {
        problem,
        optimum: problem.optimal_fitness(),
        budget,
        queries: 0,
        hit: None,
        observer,
    };
    let mut buffers = ViewBuffers {
        ranks: Vec::with_capacity(mu),
        union_ranks: Vec::with_capacity(mu + lambda),
    };

    let mut population: Vec<BitString> = Vec::with_capacity(mu + lambda);
    let mut fitness: Vec<Fitness> = Vec::with_capacity(mu + lambda);
    let mut comparison: Option<Comparison> = None;

    // Adaptive initialization: one point at a time.
    while population.len() < mu {
        let pv = make_view(view, &population, &fitness, &mut buffers.ranks, None);
        let x = policy.initial_point(&pv, n, rng);
        match eval.eval(&x)? {
            Some(f) => {
                population.push(x);
                fitness.push(f);
            }
            None => break,
        }
        if eval.stopped() {
            break;
        }
    }
    if population.len() == mu {
        eval.observer
            .on_generation(eval.queries, &population, &fitness);
    }

    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut last_pop_key: Vec<u64> = Vec::new();
    if spec.deterministic && population.len() == mu {
        let (pop, info) = state_key(view, &population, &fitness, comparison);
        last_pop_key = pop.clone();
        seen.insert([pop, info].concat());
    }

    let mut offspring: Vec<BitString> = Vec::with_capacity(lambda);
    let mut keep: Vec<usize> = Vec::with_capacity(mu);
    let mut looped = false;

    while !eval.stopped() && population.len() == mu {
        offspring.clear();
        let kind = {
            let pv = make_view(view, &population, &fitness, &mut buffers.ranks, comparison);
            policy.propose(&pv, rng, &mut offspring)
        };
        if offspring.len() != lambda {
            return Err(Error::Policy(format!(
                "{} proposed {} offspring, expected {lambda}",
                policy.id(),
                offspring.len()
            )));
        }

        // The whole batch exists before anything is evaluated.
        let mut complete = true;
        for y in &offspring {
            match eval.eval(y)? {
                Some(f) => fitness.push(f),
                None => {
                    complete = false;
                    break;
                }
            }
            if eval.hit.is_some() {
                complete = false;
                break;
            }
        }
        if !complete {
            fitness.truncate(mu);
            break;
        }
        if mu == 1 && lambda == 1 {
            comparison = Some(Comparison::of(fitness[1], fitness[0]));
        }

        if mode.elitist && mu == 1 && lambda == 1 {
            // (1+1) truncation without rebuilding the union.
            if child_survives(fitness[0], fitness[1], mode.tie_policy, rng) {
                std::mem::swap(&mut population[0], &mut offspring[0]);
                fitness[0] = fitness[1];
            }
            fitness.truncate(1);
        } else {
            population.append(&mut offspring);
            if mode.elitist {
                elitist_select_indices(&fitness, mu, mu, mode.tie_policy, rng, &mut keep);
            } else {
                let parents = PopulationView {
                    members: &population[..mu],
                    info: match view {
                        FitnessView::Absolute => ViewInfo::Absolute(&fitness[..mu]),
                        FitnessView::Ranking => {
                            rank_into(&fitness[..mu], &mut buffers.ranks);
                            ViewInfo::Ranking(&buffers.ranks)
                        }
                        FitnessView::Comparison => ViewInfo::Comparison(None),
                    },
                };
                let union = make_view(
                    view,
                    &population,
                    &fitness,
                    &mut buffers.union_ranks,
                    comparison,
                );
                keep.clear();
                policy.select(&parents, kind, &union, rng, &mut keep);
                validate_keep(&keep, mu, mu + lambda, policy.id())?;
            }
            apply_selection(&mut population, &mut fitness, &keep);
        }
        eval.observer
            .on_generation(eval.queries, &population, &fitness);

        if spec.deterministic {
            let (pop, info) = state_key(view, &population, &fitness, comparison);
            if pop != last_pop_key {
                seen.clear();
                last_pop_key = pop.clone();
            }
            if !seen.insert([pop, info].concat()) {
                looped = true;
                break;
            }
        }
    }

    let success = eval.hit.is_some();
    Ok(RunOutcome {
        queries_to_optimum: eval.hit,
        total_queries: eval.queries,
        success,
        looped,
        final_population: population,
        final_fitness: fitness,
    })
}

fn validate_keep(keep: &[usize], mu: usize, total: usize, id: &str) -> Result<()> {
    if keep.len() != mu {
        return Err(Error::Policy(format!(
            "{id} kept {} points, expected {mu}",
            keep.len()
        )));
    }
    for (i, &k) in keep.iter().enumerate() {
        if k >= total || keep[..i].contains(&k) {
            return Err(Error::Policy(format!(
                "{id} returned an invalid selection {keep:?}"
            )));
        }
    }
    Ok(())
}

fn apply_selection(population: &mut Vec<BitString>, fitness: &mut Vec<Fitness>, keep: &[usize]) {
    if keep.len() == 1 {
        let k = keep[0];
        population.swap(0, k);
        fitness.swap(0, k);
    } else {
        let next: Vec<BitString> = keep.iter().map(|&k| population[k].clone()).collect();
        let next_fit: Vec<Fitness> = keep.iter().map(|&k| fitness[k]).collect();
        population.clear();
        population.extend(next);
        fitness.clear();
        fitness.extend(next_fit);
    }
    population.truncate(keep.len());
    fitness.truncate(keep.len());
}
