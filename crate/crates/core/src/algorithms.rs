//! Algorithm policies for the black-box game.
//!
//! Each policy owns only immutable configuration (operators built for a
//! fixed `n`); everything that changes during a run lives in the game loop.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model::{
    Comparison, FitnessView, GameRng, MoveKind, Policy, PolicySpec, PopulationView, ViewInfo,
};
use crate::operators::{
    complement_operator, mixed_jump_mutation, one_bit_flip, standard_bit_mutation_default,
    uniform_resample,
};
use crate::problems::Family;
use crate::Operator;

const ANY_VIEW: &[FitnessView] = &[
    FitnessView::Comparison,
    FitnessView::Ranking,
    FitnessView::Absolute,
];

/// Whether the single offspring (union index 1) is at least as good as the
/// single parent (union index 0), read from whatever the view reveals.
fn offspring_not_worse(union: &PopulationView<'_>) -> bool {
    match union.info {
        ViewInfo::Absolute(f) => f[1] >= f[0],
        ViewInfo::Ranking(r) => r[1] <= r[0],
        ViewInfo::Comparison(c) => matches!(c, Some(Comparison::Better | Comparison::Equal)),
    }
}

/// Randomized local search: flip one uniformly chosen bit, keep the
/// offspring if it is not worse.
#[derive(Debug, Clone)]
pub struct Rls {
    flip: Operator,
}

pub fn rls(n: usize) -> Result<Rls> {
    Ok(Rls {
        flip: one_bit_flip(n)?,
    })
}

impl Policy for Rls {
    fn id(&self) -> &'static str {
        "rls"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: ANY_VIEW,
            elitist: true,
            unbiased: true,
            deterministic: false,
        }
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        BitString::random(n, rng)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        out.push(self.flip.apply(&view.members[0], rng));
        MoveKind::Variation
    }
}

/// RLS that, with probability `1/(10 n ln n)` per round, replaces the current
/// point by a uniform sample regardless of fitness.
#[derive(Debug, Clone)]
pub struct RlsWithRestarts {
    flip: Operator,
    resample: Operator,
    restart_probability: f64,
}

/// Restart probability `1/(10 n ln n)` (natural log), capped at 1.
pub fn restart_probability(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config("restarts need n >= 2".into()));
    }
    let n = n as f64;
    Ok((1.0 / (10.0 * n * n.ln())).min(1.0))
}

pub fn rls_with_restarts(n: usize) -> Result<RlsWithRestarts> {
    Ok(RlsWithRestarts {
        flip: one_bit_flip(n)?,
        resample: uniform_resample(n)?,
        restart_probability: restart_probability(n)?,
    })
}

impl RlsWithRestarts {
    pub fn restart_probability(&self) -> f64 {
        self.restart_probability
    }
}

impl Policy for RlsWithRestarts {
    fn id(&self) -> &'static str {
        "rls-restart"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: ANY_VIEW,
            elitist: false,
            unbiased: true,
            deterministic: false,
        }
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        BitString::random(n, rng)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        let x = &view.members[0];
        if rng.random_bool(self.restart_probability) {
            out.push(self.resample.apply(x, rng));
            MoveKind::Restart
        } else {
            out.push(self.flip.apply(x, rng));
            MoveKind::Variation
        }
    }

    fn select(
        &self,
        _parents: &PopulationView<'_>,
        kind: MoveKind,
        union: &PopulationView<'_>,
        _rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        let take = kind == MoveKind::Restart || offspring_not_worse(union);
        keep.push(usize::from(take));
    }
}

/// The (1+1) EA with standard bit mutation at rate `1/n`.
#[derive(Debug, Clone)]
pub struct OnePlusOneEa {
    mutation: Operator,
}

pub fn one_plus_one_ea(n: usize) -> Result<OnePlusOneEa> {
    Ok(OnePlusOneEa {
        mutation: standard_bit_mutation_default(n)?,
    })
}

impl OnePlusOneEa {
    pub fn operator(&self) -> &Operator {
        &self.mutation
    }
}

impl Policy for OnePlusOneEa {
    fn id(&self) -> &'static str {
        "opo-ea"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: ANY_VIEW,
            elitist: true,
            unbiased: true,
            deterministic: false,
        }
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        BitString::random(n, rng)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        out.push(self.mutation.apply(&view.members[0], rng));
        MoveKind::Variation
    }
}

/// Non-elitist (1+1) path follower for the hidden-path family.
///
/// With absolute fitness `f` of the current point:
/// * `n <= f < 2n`: RLS on the padded OneMax part;
/// * `f = 2n` (the local optimum `z`): jump to the complement, accepted
///   unconditionally;
/// * `f < n` (on the path): one-bit flips, accepting only fitness `f + 1`
///   or the optimum value `2n + 1`.
#[derive(Debug, Clone)]
pub struct HiddenPathFollower {
    n: usize,
    flip: Operator,
    complement: Operator,
}

pub fn hidden_path_follower(n: usize) -> Result<HiddenPathFollower> {
    Ok(HiddenPathFollower {
        n,
        flip: one_bit_flip(n)?,
        complement: complement_operator(n)?,
    })
}

fn require_hidden_path(family: Option<Family>) -> Result<()> {
    match family {
        None | Some(Family::HiddenPath) => Ok(()),
        Some(other) => Err(Error::Config(format!(
            "path followers only run on hiddenpath, not {other}"
        ))),
    }
}

impl Policy for HiddenPathFollower {
    fn id(&self) -> &'static str {
        "path-follow"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: &[FitnessView::Absolute],
            elitist: false,
            unbiased: true,
            deterministic: false,
        }
    }

    fn check_family(&self, family: Option<Family>) -> Result<()> {
        require_hidden_path(family)
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        BitString::random(n, rng)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        let x = &view.members[0];
        let f = view.fitness(0).expect("absolute view").0;
        if f == 2 * self.n as i64 {
            out.push(self.complement.apply(x, rng));
            MoveKind::Complement
        } else {
            out.push(self.flip.apply(x, rng));
            MoveKind::Variation
        }
    }

    fn select(
        &self,
        _parents: &PopulationView<'_>,
        kind: MoveKind,
        union: &PopulationView<'_>,
        _rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        let n = self.n as i64;
        let (fx, fy) = (
            union.fitness(0).expect("absolute view").0,
            union.fitness(1).expect("absolute view").0,
        );
        let take = match kind {
            MoveKind::Complement => true,
            _ if fx >= n => fy >= fx,
            _ => fy == fx + 1 || fy == 2 * n + 1,
        };
        keep.push(usize::from(take));
    }
}

/// Ranking-based (2+1) path follower.
///
/// The population is an anchor `a` (better rank) and a current point `c`.
/// Offspring are one-bit flips of `c`. With `y` the offspring:
/// * `y` strictly worse than `c` and `d(a, c) = 1`: keep `{c, y}` (descent,
///   the old current point becomes the anchor);
/// * `y` strictly between `c` and `a`: keep `{a, y}` (path step);
/// * `y` strictly better than `a` and `d(a, c) = 1`: keep `{y, c}`;
/// * `y` ranked equal to `a` and `d(a, c) != 1`: keep `{y, c}` (re-anchor
///   next to the current point);
/// * otherwise keep `{a, c}`.
///
/// The descent ends on the path start with an anchor of padded fitness
/// `n + 1`, after which only the next path point ranks between the two.
#[derive(Debug, Clone)]
pub struct TwoPlusOnePathFollower {
    flip: Operator,
}

pub fn two_plus_one_path_follower(n: usize) -> Result<TwoPlusOnePathFollower> {
    Ok(TwoPlusOnePathFollower {
        flip: one_bit_flip(n)?,
    })
}

/// (anchor, current) indices from two ranks; on ties index 1 is current.
fn anchor_and_current(rank0: u32, rank1: u32) -> (usize, usize) {
    if rank0 > rank1 {
        (1, 0)
    } else {
        (0, 1)
    }
}

impl Policy for TwoPlusOnePathFollower {
    fn id(&self) -> &'static str {
        "path-follow-2p1"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 2,
            lambda: 1,
            views: &[FitnessView::Ranking, FitnessView::Absolute],
            elitist: false,
            unbiased: true,
            deterministic: false,
        }
    }

    fn check_family(&self, family: Option<Family>) -> Result<()> {
        require_hidden_path(family)
    }

    fn initial_point(&self, view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        match view.members.first() {
            None => BitString::random(n, rng),
            Some(x) => self.flip.apply(x, rng),
        }
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        let (_, c) = anchor_and_current(view.rank(0).unwrap(), view.rank(1).unwrap());
        out.push(self.flip.apply(&view.members[c], rng));
        MoveKind::Variation
    }

    fn select(
        &self,
        _parents: &PopulationView<'_>,
        _kind: MoveKind,
        union: &PopulationView<'_>,
        _rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        let rank = |i| union.rank(i).expect("ranking information");
        let (a, c) = anchor_and_current(rank(0), rank(1));
        let y = 2;
        let adjacent = union.members[a].hamming_unchecked(&union.members[c]) == 1;
        let (ra, rc, ry) = (rank(a), rank(c), rank(y));
        if ry > rc && adjacent {
            keep.extend([c, y]);
        } else if ry < rc && ry > ra {
            keep.extend([a, y]);
        } else if (ry < ra && adjacent) || (ry == ra && !adjacent) {
            keep.extend([y, c]);
        } else {
            keep.extend([a, c]);
        }
    }
}

/// (1+1) elitist solver for Jump: uniform sample, one-bit flip or
/// `(k+1)`-bit flip, each with probability 1/3; accept if not worse.
#[derive(Debug, Clone)]
pub struct JumpMixedSolver {
    k: usize,
    mutation: Operator,
}

pub fn jump_mixed_solver(n: usize, k: usize) -> Result<JumpMixedSolver> {
    Ok(JumpMixedSolver {
        k,
        mutation: mixed_jump_mutation(n, k)?,
    })
}

impl JumpMixedSolver {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn operator(&self) -> &Operator {
        &self.mutation
    }
}

impl Policy for JumpMixedSolver {
    fn id(&self) -> &'static str {
        "jump-mixed"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: &[FitnessView::Absolute, FitnessView::Ranking],
            elitist: true,
            unbiased: true,
            deterministic: false,
        }
    }

    fn check_family(&self, family: Option<Family>) -> Result<()> {
        match family {
            None => Ok(()),
            Some(Family::Jump { k }) if k == self.k => Ok(()),
            Some(Family::Jump { k }) => Err(Error::Config(format!(
                "jump-mixed built for k = {} but the instance has k = {k}",
                self.k
            ))),
            Some(other) => Err(Error::Config(format!(
                "jump-mixed only runs on jump, not {other}"
            ))),
        }
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        BitString::random(n, rng)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        out.push(self.mutation.apply(&view.members[0], rng));
        MoveKind::Variation
    }
}

/// Deterministic elitist (1+1) policy: start at `0^n`, always flip bit 0.
/// On OneMax it stalls as soon as flipping bit 0 makes things worse.
#[derive(Debug, Clone, Copy)]
pub struct StuckDemo;

pub fn stuck_demo() -> StuckDemo {
    StuckDemo
}

impl Policy for StuckDemo {
    fn id(&self) -> &'static str {
        "stuck-demo"
    }

    fn spec(&self) -> PolicySpec {
        PolicySpec {
            mu: 1,
            lambda: 1,
            views: ANY_VIEW,
            elitist: true,
            unbiased: false,
            deterministic: true,
        }
    }

    fn initial_point(&self, _view: &PopulationView<'_>, n: usize, _rng: &mut GameRng) -> BitString {
        BitString::zeros(n)
    }

    fn propose(
        &self,
        view: &PopulationView<'_>,
        _rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        out.push(view.members[0].flipped(0));
        MoveKind::Variation
    }
}

/// Stable registry ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    Rls,
    RlsRestart,
    OnePlusOneEa,
    PathFollow,
    PathFollow2p1,
    JumpMixed,
    StuckDemo,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 7] = [
        AlgorithmId::Rls,
        AlgorithmId::RlsRestart,
        AlgorithmId::OnePlusOneEa,
        AlgorithmId::PathFollow,
        AlgorithmId::PathFollow2p1,
        AlgorithmId::JumpMixed,
        AlgorithmId::StuckDemo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Rls => "rls",
            AlgorithmId::RlsRestart => "rls-restart",
            AlgorithmId::OnePlusOneEa => "opo-ea",
            AlgorithmId::PathFollow => "path-follow",
            AlgorithmId::PathFollow2p1 => "path-follow-2p1",
            AlgorithmId::JumpMixed => "jump-mixed",
            AlgorithmId::StuckDemo => "stuck-demo",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            AlgorithmId::Rls => "randomized local search, (1+1) elitist",
            AlgorithmId::RlsRestart => {
                "RLS with uniform restarts at rate 1/(10 n ln n), non-elitist"
            }
            AlgorithmId::OnePlusOneEa => "(1+1) EA, standard bit mutation at rate 1/n, elitist",
            AlgorithmId::PathFollow => "(1+1) hidden-path follower, absolute fitness, non-elitist",
            AlgorithmId::PathFollow2p1 => "(2+1) ranking-based hidden-path follower, non-elitist",
            AlgorithmId::JumpMixed => "(1+1) elitist uniform/1-bit/(k+1)-bit mixture for jump",
            AlgorithmId::StuckDemo => "deterministic (1+1) elitist policy that always flips bit 0",
        }
    }

    /// Instantiates the policy for dimension `n` (and `k` for jump-mixed).
    pub fn build(self, n: usize, k: Option<usize>) -> Result<AnyPolicy> {
        Ok(match self {
            AlgorithmId::Rls => AnyPolicy::Rls(rls(n)?),
            AlgorithmId::RlsRestart => AnyPolicy::RlsRestart(rls_with_restarts(n)?),
            AlgorithmId::OnePlusOneEa => AnyPolicy::OnePlusOneEa(one_plus_one_ea(n)?),
            AlgorithmId::PathFollow => AnyPolicy::PathFollow(hidden_path_follower(n)?),
            AlgorithmId::PathFollow2p1 => AnyPolicy::PathFollow2p1(two_plus_one_path_follower(n)?),
            AlgorithmId::JumpMixed => {
                let k = k.ok_or_else(|| Error::Config("jump-mixed needs k".into()))?;
                AnyPolicy::JumpMixed(jump_mixed_solver(n, k)?)
            }
            AlgorithmId::StuckDemo => AnyPolicy::StuckDemo(stuck_demo()),
        })
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

/// Any registered policy, statically dispatched.
#[derive(Debug, Clone)]
pub enum AnyPolicy {
    Rls(Rls),
    RlsRestart(RlsWithRestarts),
    OnePlusOneEa(OnePlusOneEa),
    PathFollow(HiddenPathFollower),
    PathFollow2p1(TwoPlusOnePathFollower),
    JumpMixed(JumpMixedSolver),
    StuckDemo(StuckDemo),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            AnyPolicy::Rls($p) => $e,
            AnyPolicy::RlsRestart($p) => $e,
            AnyPolicy::OnePlusOneEa($p) => $e,
            AnyPolicy::PathFollow($p) => $e,
            AnyPolicy::PathFollow2p1($p) => $e,
            AnyPolicy::JumpMixed($p) => $e,
            AnyPolicy::StuckDemo($p) => $e,
        }
    };
}

impl Policy for AnyPolicy {
    fn id(&self) -> &'static str {
        dispatch!(self, p => p.id())
    }

    fn spec(&self) -> PolicySpec {
        dispatch!(self, p => p.spec())
    }

    fn check_family(&self, family: Option<Family>) -> Result<()> {
        dispatch!(self, p => p.check_family(family))
    }

    fn initial_point(&self, view: &PopulationView<'_>, n: usize, rng: &mut GameRng) -> BitString {
        dispatch!(self, p => p.initial_point(view, n, rng))
    }

    #[inline]
    fn propose(
        &self,
        view: &PopulationView<'_>,
        rng: &mut GameRng,
        out: &mut Vec<BitString>,
    ) -> MoveKind {
        dispatch!(self, p => p.propose(view, rng, out))
    }

    fn select(
        &self,
        parents: &PopulationView<'_>,
        kind: MoveKind,
        union: &PopulationView<'_>,
        rng: &mut GameRng,
        keep: &mut Vec<usize>,
    ) {
        dispatch!(self, p => p.select(parents, kind, union, rng, keep))
    }
}
