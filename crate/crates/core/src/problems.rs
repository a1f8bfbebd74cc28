//! Hidden-parameter benchmark families with exact integer fitness.
//!
//! * OneMax `Om_z(x) = n - d(x, z)`.
//! * DoubleOneMax: `n + 1` at `z1`, otherwise the larger of the two OneMax
//!   values for `z1` and `z2`.
//! * HiddenPath: OneMax lifted by `n`, with a path of `n/4` low-fitness
//!   points from the complement of `z` to the unique global optimum.
//! * Jump: OneMax value when it lies in `{0} ∪ {k+1..n-k-1} ∪ {n}`, else 0.
//!
//! Bit positions are 0-based here and in the text record.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model::Fitness;

/// A pseudo-Boolean objective the game loop can query.
pub trait Problem: Sync {
    fn n(&self) -> usize;

    /// Fitness of `x`. `x.len()` must equal `n()`; callers check lengths.
    fn fitness(&self, x: &BitString) -> Fitness;

    /// Fitness of the unique global optimum.
    fn optimal_fitness(&self) -> Fitness;

    fn family(&self) -> Option<Family> {
        None
    }

    fn evaluate(&self, x: &BitString) -> Result<Fitness> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.n(),
            });
        }
        Ok(self.fitness(x))
    }
}

/// Function family with its shape parameters (the hidden bits excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    OneMax,
    DoubleOneMax,
    HiddenPath,
    Jump { k: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::OneMax => "onemax",
            Family::DoubleOneMax => "doubleonemax",
            Family::HiddenPath => "hiddenpath",
            Family::Jump { .. } => "jump",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Family::Jump { k } => Some(*k),
            _ => None,
        }
    }

    /// Parses a family name, taking `k` for Jump.
    pub fn parse(name: &str, k: Option<usize>) -> Result<Self> {
        match name {
            "onemax" => Ok(Family::OneMax),
            "doubleonemax" | "double-onemax" => Ok(Family::DoubleOneMax),
            "hiddenpath" | "hidden-path" => Ok(Family::HiddenPath),
            "jump" => k
                .map(|k| Family::Jump { k })
                .ok_or_else(|| Error::Config("jump needs a k parameter".into())),
            _ => Err(Error::Parse(format!("unknown problem family {name:?}"))),
        }
    }

    /// Checks the family's constraints for dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidProblem("n must be positive".into()));
        }
        match *self {
            Family::OneMax | Family::DoubleOneMax => Ok(()),
            Family::HiddenPath => {
                if !n.is_multiple_of(4) {
                    Err(Error::InvalidProblem(format!(
                        "hidden path needs n divisible by 4, got {n}"
                    )))
                } else {
                    Ok(())
                }
            }
            Family::Jump { k } => validate_jump_k(n, k),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Jump { k } => write!(f, "jump(k={k})"),
            other => f.write_str(other.name()),
        }
    }
}

fn validate_jump_k(n: usize, k: usize) -> Result<()> {
    // 0 <= k <= n/2 - 1, i.e. 2k + 2 <= n
    if 2 * k + 2 > n {
        return Err(Error::InvalidProblem(format!(
            "jump needs 0 <= k <= n/2 - 1, got n={n}, k={k}"
        )));
    }
    Ok(())
}

fn check_len(x: &BitString, n: usize) -> Result<()> {
    if x.len() != n {
        Err(Error::LengthMismatch {
            left: x.len(),
            right: n,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneMaxInstance {
    z: BitString,
}

impl OneMaxInstance {
    pub fn new(z: BitString) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidProblem("n must be positive".into()));
        }
        Ok(OneMaxInstance { z })
    }

    pub fn target(&self) -> &BitString {
        &self.z
    }
}

impl Problem for OneMaxInstance {
    fn n(&self) -> usize {
        self.z.len()
    }

    #[inline]
    fn fitness(&self, x: &BitString) -> Fitness {
        Fitness((self.z.len() - x.hamming_unchecked(&self.z)) as i64)
    }

    fn optimal_fitness(&self) -> Fitness {
        Fitness(self.z.len() as i64)
    }

    fn family(&self) -> Option<Family> {
        Some(Family::OneMax)
    }
}

pub fn onemax_eval(inst: &OneMaxInstance, x: &BitString) -> Result<Fitness> {
    inst.evaluate(x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleOneMaxInstance {
    z1: BitString,
    z2: BitString,
}

impl DoubleOneMaxInstance {
    pub fn new(z1: BitString, z2: BitString) -> Result<Self> {
        check_len(&z2, z1.len())?;
        if z1.is_empty() {
            return Err(Error::InvalidProblem("n must be positive".into()));
        }
        if z1 == z2 {
            return Err(Error::InvalidProblem("z1 and z2 must differ".into()));
        }
        Ok(DoubleOneMaxInstance { z1, z2 })
    }

    /// The global optimum.
    pub fn z1(&self) -> &BitString {
        &self.z1
    }

    /// The unique second-best point.
    pub fn z2(&self) -> &BitString {
        &self.z2
    }

    /// The same pair with the roles of the two peaks exchanged.
    pub fn swapped(&self) -> Self {
        DoubleOneMaxInstance {
            z1: self.z2.clone(),
            z2: self.z1.clone(),
        }
    }
}

impl Problem for DoubleOneMaxInstance {
    fn n(&self) -> usize {
        self.z1.len()
    }

    #[inline]
    fn fitness(&self, x: &BitString) -> Fitness {
        let n = self.z1.len();
        let d1 = x.hamming_unchecked(&self.z1);
        if d1 == 0 {
            return Fitness(n as i64 + 1);
        }
        let d2 = x.hamming_unchecked(&self.z2);
        Fitness((n - d1.min(d2)) as i64)
    }

    fn optimal_fitness(&self) -> Fitness {
        Fitness(self.z1.len() as i64 + 1)
    }

    fn family(&self) -> Option<Family> {
        Some(Family::DoubleOneMax)
    }
}

pub fn double_onemax_eval(inst: &DoubleOneMaxInstance, x: &BitString) -> Result<Fitness> {
    inst.evaluate(x)
}

/// `z^0, ..., z^l` where `z^j` is `z^{j-1}` with bit `indices[j-1]` flipped.
pub fn build_path(z0: &BitString, indices: &[usize]) -> Result<Vec<BitString>> {
    let n = z0.len();
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::InvalidProblem(format!(
                "path index {i} out of range for n={n}"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidProblem(format!("duplicate path index {i}")));
        }
        seen[i] = true;
    }
    let mut path = Vec::with_capacity(indices.len() + 1);
    let mut current = z0.clone();
    path.push(current.clone());
    for &i in indices {
        current.flip(i);
        path.push(current.clone());
    }
    Ok(path)
}

/// OneMax padded by `n` plus a hidden path of length `n/4`.
///
/// For `n = 4` the path has a single step, so the optimum is a neighbour of
/// the complement of `z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenPathInstance {
    z: BitString,
    indices: Vec<usize>,
    path: Vec<BitString>,
}

impl HiddenPathInstance {
    pub fn new(z: BitString, indices: Vec<usize>) -> Result<Self> {
        let n = z.len();
        Family::HiddenPath.validate(n)?;
        if indices.len() != n / 4 {
            return Err(Error::InvalidProblem(format!(
                "hidden path needs exactly n/4 = {} indices, got {}",
                n / 4,
                indices.len()
            )));
        }
        let path = build_path(&z.complement(), &indices)?;
        Ok(HiddenPathInstance { z, indices, path })
    }

    /// Local optimum of the padded OneMax part.
    pub fn z(&self) -> &BitString {
        &self.z
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `z^0, ..., z^l`.
    pub fn path(&self) -> &[BitString] {
        &self.path
    }

    pub fn path_len(&self) -> usize {
        self.indices.len()
    }

    pub fn optimum(&self) -> &BitString {
        self.path.last().expect("path is never empty")
    }
}

impl Problem for HiddenPathInstance {
    fn n(&self) -> usize {
        self.z.len()
    }

    #[inline]
    fn fitness(&self, x: &BitString) -> Fitness {
        let n = self.z.len();
        let ell = self.indices.len();
        // distance to z^0 equals Om_z(x), and z^j sits at distance j from z^0
        let om = x.hamming_unchecked(&self.path[0]);
        if om <= ell && *x == self.path[om] {
            if om == ell {
                return Fitness(2 * n as i64 + 1);
            }
            return Fitness(om as i64);
        }
        Fitness((n + om) as i64)
    }

    fn optimal_fitness(&self) -> Fitness {
        Fitness(2 * self.z.len() as i64 + 1)
    }

    fn family(&self) -> Option<Family> {
        Some(Family::HiddenPath)
    }
}

pub fn hidden_path_eval(inst: &HiddenPathInstance, x: &BitString) -> Result<Fitness> {
    inst.evaluate(x)
}

/// Jump with a hidden target `z`; the all-ones target gives the classic form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpInstance {
    z: BitString,
    k: usize,
}

impl JumpInstance {
    pub fn new(z: BitString, k: usize) -> Result<Self> {
        validate_jump_k(z.len(), k)?;
        Ok(JumpInstance { z, k })
    }

    pub fn target(&self) -> &BitString {
        &self.z
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether a OneMax value `m` is visible (not zeroed).
    #[inline]
    pub fn visible(&self, m: usize) -> bool {
        let n = self.z.len();
        m == 0 || m == n || (m > self.k && m + self.k < n)
    }
}

impl Problem for JumpInstance {
    fn n(&self) -> usize {
        self.z.len()
    }

    #[inline]
    fn fitness(&self, x: &BitString) -> Fitness {
        let m = self.z.len() - x.hamming_unchecked(&self.z);
        Fitness(if self.visible(m) { m as i64 } else { 0 })
    }

    fn optimal_fitness(&self) -> Fitness {
        Fitness(self.z.len() as i64)
    }

    fn family(&self) -> Option<Family> {
        Some(Family::Jump { k: self.k })
    }
}

pub fn jump_eval(inst: &JumpInstance, x: &BitString) -> Result<Fitness> {
    inst.evaluate(x)
}

/// Any instance of the four shipped families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemInstance {
    OneMax(OneMaxInstance),
    DoubleOneMax(DoubleOneMaxInstance),
    HiddenPath(HiddenPathInstance),
    Jump(JumpInstance),
}

impl ProblemInstance {
    pub fn family_kind(&self) -> Family {
        match self {
            ProblemInstance::OneMax(_) => Family::OneMax,
            ProblemInstance::DoubleOneMax(_) => Family::DoubleOneMax,
            ProblemInstance::HiddenPath(_) => Family::HiddenPath,
            ProblemInstance::Jump(j) => Family::Jump { k: j.k },
        }
    }

    /// Canonical one-line text record: family name, `n`, parameters, and the
    /// hidden bits hex-encoded (see [`BitString::to_hex`]).
    pub fn to_record(&self) -> String {
        match self {
            ProblemInstance::OneMax(i) => format!("onemax n={} z={}", i.n(), i.z.to_hex()),
            ProblemInstance::DoubleOneMax(i) => format!(
                "doubleonemax n={} z1={} z2={}",
                i.n(),
                i.z1.to_hex(),
                i.z2.to_hex()
            ),
            ProblemInstance::HiddenPath(i) => format!(
                "hiddenpath n={} z={} path={}",
                i.n(),
                i.z.to_hex(),
                i.indices
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            ProblemInstance::Jump(i) => {
                format!("jump n={} k={} z={}", i.n(), i.k, i.z.to_hex())
            }
        }
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut parts = record.split_whitespace();
        let family = parts
            .next()
            .ok_or_else(|| Error::Parse("empty instance record".into()))?;
        let mut fields = std::collections::BTreeMap::new();
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed field {part:?}")))?;
            if fields.insert(key, value).is_some() {
                return Err(Error::Parse(format!("duplicate field {key:?}")));
            }
        }
        let field = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
        };
        let number = |key: &str| -> Result<usize> {
            field(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("field {key:?} is not an integer")))
        };
        let n = number("n")?;
        let bits = |key: &str| -> Result<BitString> { BitString::from_hex(field(key)?, n) };
        let expected: &[&str] = match family {
            "onemax" => &["n", "z"],
            "doubleonemax" => &["n", "z1", "z2"],
            "hiddenpath" => &["n", "z", "path"],
            "jump" => &["n", "k", "z"],
            _ => return Err(Error::Parse(format!("unknown family {family:?}"))),
        };
        if fields.len() != expected.len() || expected.iter().any(|k| !fields.contains_key(k)) {
            return Err(Error::Parse(format!(
                "{family} record needs exactly the fields {expected:?}"
            )));
        }
        Ok(match family {
            "onemax" => ProblemInstance::OneMax(OneMaxInstance::new(bits("z")?)?),
            "doubleonemax" => {
                ProblemInstance::DoubleOneMax(DoubleOneMaxInstance::new(bits("z1")?, bits("z2")?)?)
            }
            "hiddenpath" => {
                let raw = field("path")?;
                let indices = if raw.is_empty() {
                    Vec::new()
                } else {
                    raw.split(',')
                        .map(|p| {
                            p.parse::<usize>()
                                .map_err(|_| Error::Parse(format!("bad path index {p:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                ProblemInstance::HiddenPath(HiddenPathInstance::new(bits("z")?, indices)?)
            }
            "jump" => ProblemInstance::Jump(JumpInstance::new(bits("z")?, number("k")?)?),
            _ => unreachable!(),
        })
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

impl FromStr for ProblemInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemInstance::from_record(s)
    }
}

impl Problem for ProblemInstance {
    fn n(&self) -> usize {
        match self {
            ProblemInstance::OneMax(i) => i.n(),
            ProblemInstance::DoubleOneMax(i) => i.n(),
            ProblemInstance::HiddenPath(i) => i.n(),
            ProblemInstance::Jump(i) => i.n(),
        }
    }

    #[inline]
    fn fitness(&self, x: &BitString) -> Fitness {
        match self {
            ProblemInstance::OneMax(i) => i.fitness(x),
            ProblemInstance::DoubleOneMax(i) => i.fitness(x),
            ProblemInstance::HiddenPath(i) => i.fitness(x),
            ProblemInstance::Jump(i) => i.fitness(x),
        }
    }

    fn optimal_fitness(&self) -> Fitness {
        match self {
            ProblemInstance::OneMax(i) => i.optimal_fitness(),
            ProblemInstance::DoubleOneMax(i) => i.optimal_fitness(),
            ProblemInstance::HiddenPath(i) => i.optimal_fitness(),
            ProblemInstance::Jump(i) => i.optimal_fitness(),
        }
    }

    fn family(&self) -> Option<Family> {
        Some(self.family_kind())
    }
}

/// Draws an instance uniformly from the family's instance set.
pub fn sample_instance<R: Rng + ?Sized>(
    family: Family,
    n: usize,
    rng: &mut R,
) -> Result<ProblemInstance> {
    family.validate(n)?;
    Ok(match family {
        Family::OneMax => ProblemInstance::OneMax(OneMaxInstance::new(BitString::random(n, rng))?),
        Family::DoubleOneMax => {
            let z1 = BitString::random(n, rng);
            let z2 = loop {
                let candidate = BitString::random(n, rng);
                if candidate != z1 {
                    break candidate;
                }
            };
            ProblemInstance::DoubleOneMax(DoubleOneMaxInstance::new(z1, z2)?)
        }
        Family::HiddenPath => {
            let z = BitString::random(n, rng);
            let mut positions: Vec<usize> = (0..n).collect();
            let (chosen, _) = positions.partial_shuffle(rng, n / 4);
            let indices = chosen.to_vec();
            ProblemInstance::HiddenPath(HiddenPathInstance::new(z, indices)?)
        }
        Family::Jump { k } => {
            ProblemInstance::Jump(JumpInstance::new(BitString::random(n, rng), k)?)
        }
    })
}
