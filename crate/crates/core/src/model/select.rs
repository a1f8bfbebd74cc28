use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::Fitness;
use crate::bits::BitString;
use crate::error::{Error, Result};

/// How equal-fitness candidates at the truncation boundary are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TiePolicy {
    #[default]
    PreferOffspring,
    PreferParent,
    UniformRandom,
}

impl TiePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            TiePolicy::PreferOffspring => "prefer_offspring",
            TiePolicy::PreferParent => "prefer_parent",
            TiePolicy::UniformRandom => "uniform_random",
        }
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefer_offspring" | "prefer-offspring" => Ok(TiePolicy::PreferOffspring),
            "prefer_parent" | "prefer-parent" => Ok(TiePolicy::PreferParent),
            "uniform_random" | "uniform-random" => Ok(TiePolicy::UniformRandom),
            _ => Err(Error::Parse(format!("unknown tie policy {s:?}"))),
        }
    }
}

/// A search point together with its (hidden) fitness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub point: BitString,
    pub fitness: Fitness,
}

impl Candidate {
    pub fn new(point: BitString, fitness: Fitness) -> Self {
        Candidate { point, fitness }
    }
}

/// Truncation selection: keeps the `mu` fitness-best points of
/// `parents ∪ offspring`, with `tie_policy` ordering equal-fitness points.
pub fn elitist_select<R: Rng + ?Sized>(
    parents: &[Candidate],
    offspring: &[Candidate],
    mu: usize,
    tie_policy: TiePolicy,
    rng: &mut R,
) -> Vec<BitString> {
    let fitness: Vec<Fitness> = parents
        .iter()
        .chain(offspring.iter())
        .map(|c| c.fitness)
        .collect();
    let mut keep = Vec::with_capacity(mu);
    elitist_select_indices(&fitness, parents.len(), mu, tie_policy, rng, &mut keep);
    keep.into_iter()
        .map(|i| {
            if i < parents.len() {
                parents[i].point.clone()
            } else {
                offspring[i - parents.len()].point.clone()
            }
        })
        .collect()
}

/// Index form of [`elitist_select`]. `fitness` lists parents first, then
/// offspring; `out` receives the `mu` kept indices, best first.
/// (1+1) truncation: whether the offspring replaces the parent.
#[inline]
pub fn child_survives<R: Rng + ?Sized>(
    parent: Fitness,
    child: Fitness,
    tie_policy: TiePolicy,
    rng: &mut R,
) -> bool {
    match child.cmp(&parent) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => match tie_policy {
            TiePolicy::PreferOffspring => true,
            TiePolicy::PreferParent => false,
            TiePolicy::UniformRandom => rng.random_bool(0.5),
        },
    }
}

pub fn elitist_select_indices<R: Rng + ?Sized>(
    fitness: &[Fitness],
    parent_count: usize,
    mu: usize,
    tie_policy: TiePolicy,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    let total = fitness.len();
    assert!(mu <= total, "cannot keep {mu} of {total} candidates");

    // (1+1) fast path
    if total == 2 && parent_count == 1 && mu == 1 {
        out.push(usize::from(child_survives(
            fitness[0], fitness[1], tie_policy, rng,
        )));
        return;
    }

    let tie_key: Vec<u64> = match tie_policy {
        TiePolicy::PreferOffspring => (0..total).map(|i| u64::from(i < parent_count)).collect(),
        TiePolicy::PreferParent => (0..total).map(|i| u64::from(i >= parent_count)).collect(),
        TiePolicy::UniformRandom => (0..total).map(|_| rng.random()).collect(),
    };
    out.extend(0..total);
    out.sort_by(|&a, &b| {
        fitness[b]
            .cmp(&fitness[a])
            .then(tie_key[a].cmp(&tie_key[b]))
            .then(a.cmp(&b))
    });
    out.truncate(mu);
}
