//! The elitist black-box model: fitness views, rankings, truncation
//! selection and the enforced game loop between a policy and a hidden
//! problem instance.

mod game;
mod select;

use std::fmt;
use std::str::FromStr;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub use game::{
    run_game, run_game_observed, GameObserver, GameRng, MoveKind, NoObserver, Policy, PolicySpec,
    RunOutcome,
};
pub use select::{child_survives, elitist_select, elitist_select_indices, Candidate, TiePolicy};

/// Exact integer fitness. Larger is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fitness(pub i64);

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Dense ranks, one per population member; rank 1 is best.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ranking(Vec<u32>);

impl Ranking {
    pub fn ranks(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self, i: usize) -> u32 {
        self.0[i]
    }
}

/// Ranks a fitness sequence. Equal fitness shares a rank; ranks are dense.
pub fn rank_population(fitnesses: &[Fitness]) -> Result<Ranking> {
    if fitnesses.is_empty() {
        return Err(Error::Config("cannot rank an empty population".into()));
    }
    let mut ranks = Vec::new();
    rank_into(fitnesses, &mut ranks);
    Ok(Ranking(ranks))
}

pub(crate) fn rank_into(fitnesses: &[Fitness], out: &mut Vec<u32>) {
    out.clear();
    match fitnesses.len() {
        0 => {}
        1 => out.push(1),
        2 => {
            let (a, b) = (fitnesses[0], fitnesses[1]);
            out.extend_from_slice(match a.cmp(&b) {
                std::cmp::Ordering::Equal => &[1, 1],
                std::cmp::Ordering::Greater => &[1, 2],
                std::cmp::Ordering::Less => &[2, 1],
            });
        }
        _ => {
            let mut distinct: Vec<Fitness> = fitnesses.to_vec();
            distinct.sort_unstable_by(|a, b| b.cmp(a));
            distinct.dedup();
            out.extend(fitnesses.iter().map(|f| {
                let pos = distinct.binary_search_by(|d| f.cmp(d)).expect("present");
                pos as u32 + 1
            }));
        }
    }
}

/// What the policy is told about the fitness of its population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitnessView {
    Absolute,
    Ranking,
    Comparison,
}

impl FitnessView {
    pub fn as_str(self) -> &'static str {
        match self {
            FitnessView::Absolute => "absolute",
            FitnessView::Ranking => "ranking",
            FitnessView::Comparison => "comparison",
        }
    }
}

impl fmt::Display for FitnessView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitnessView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(FitnessView::Absolute),
            "ranking" => Ok(FitnessView::Ranking),
            "comparison" => Ok(FitnessView::Comparison),
            _ => Err(Error::Parse(format!("unknown fitness view {s:?}"))),
        }
    }
}

/// Outcome of comparing the last offspring against its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Worse,
    Equal,
    Better,
}

impl Comparison {
    pub fn of(offspring: Fitness, parent: Fitness) -> Self {
        match offspring.cmp(&parent) {
            std::cmp::Ordering::Less => Comparison::Worse,
            std::cmp::Ordering::Equal => Comparison::Equal,
            std::cmp::Ordering::Greater => Comparison::Better,
        }
    }
}

/// The constraints a run is played under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelMode {
    pub mu: usize,
    pub lambda: usize,
    pub fitness_view: FitnessView,
    pub elitist: bool,
    pub unbiased: bool,
    /// Tie handling for elitist truncation; ignored by custom acceptance.
    pub tie_policy: TiePolicy,
}

impl ModelMode {
    pub fn new(mu: usize, lambda: usize, fitness_view: FitnessView, elitist: bool) -> Result<Self> {
        let mode = ModelMode {
            mu,
            lambda,
            fitness_view,
            elitist,
            unbiased: false,
            tie_policy: TiePolicy::PreferOffspring,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn with_unbiased(mut self, unbiased: bool) -> Self {
        self.unbiased = unbiased;
        self
    }

    pub fn with_tie_policy(mut self, tie_policy: TiePolicy) -> Self {
        self.tie_policy = tie_policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 || self.lambda == 0 {
            return Err(Error::Config("mu and lambda must be positive".into()));
        }
        if self.fitness_view == FitnessView::Comparison && (self.mu != 1 || self.lambda != 1) {
            return Err(Error::Config(
                "comparison view requires mu = lambda = 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-member information revealed to a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewInfo<'a> {
    Absolute(&'a [Fitness]),
    Ranking(&'a [u32]),
    /// `None` until the first comparison has happened.
    Comparison(Option<Comparison>),
}

/// Everything a policy may look at: the current multiset and its view.
#[derive(Debug, Clone, Copy)]
pub struct PopulationView<'a> {
    pub members: &'a [BitString],
    pub info: ViewInfo<'a>,
}

impl<'a> PopulationView<'a> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Absolute fitness of member `i`, if the view reveals it.
    pub fn fitness(&self, i: usize) -> Option<Fitness> {
        match self.info {
            ViewInfo::Absolute(f) => f.get(i).copied(),
            _ => None,
        }
    }

    /// Rank of member `i` (1 = best), derived from absolute values when
    /// those are shown.
    pub fn rank(&self, i: usize) -> Option<u32> {
        match self.info {
            ViewInfo::Ranking(r) => r.get(i).copied(),
            ViewInfo::Absolute(f) => {
                let mut ranks = Vec::with_capacity(f.len());
                rank_into(f, &mut ranks);
                ranks.get(i).copied()
            }
            ViewInfo::Comparison(_) => None,
        }
    }

    /// Index of a best-ranked member, first one on ties.
    pub fn best(&self) -> usize {
        (0..self.len())
            .min_by_key(|&i| self.rank(i).unwrap_or(1))
            .unwrap_or(0)
    }

    pub fn comparison(&self) -> Option<Comparison> {
        match self.info {
            ViewInfo::Comparison(c) => c,
            _ => None,
        }
    }
}
