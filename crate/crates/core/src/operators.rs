//! Unary unbiased variation in radial form.
//!
//! A unary unbiased operator is fully described by its distribution over
//! flip counts: draw `c`, then flip a uniformly random `c`-subset of
//! positions. Subsets are drawn with Floyd's algorithm, which needs exactly
//! `c` uniform draws and no scratch array.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::scalar::{binomial, binomial_big, pow, Exact, Weight};

/// Distribution over flip counts `0..=n` together with a sampling table.
#[derive(Debug, Clone)]
pub struct UnaryUnbiasedOperator<T: Weight = f64> {
    name: String,
    radial: Vec<T>,
    cdf: Vec<f64>,
    point_mass: Option<usize>,
}

impl<T: Weight> PartialEq for UnaryUnbiasedOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.radial == other.radial
    }
}

impl<T: Weight> UnaryUnbiasedOperator<T> {
    /// Builds an operator from flip-count weights. Weights must be
    /// nonnegative and sum to one (exactly for exact scalars, within 1e-9
    /// for floats).
    pub fn from_radial(name: impl Into<String>, radial: Vec<T>) -> Result<Self> {
        if radial.is_empty() {
            return Err(Error::InvalidOperator(
                "radial distribution is empty".into(),
            ));
        }
        if radial.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidOperator("negative flip-count weight".into()));
        }
        let total = radial.iter().cloned().fold(T::zero(), |a, b| a + b);
        let exact_total = total.to_exact();
        let float_total = total.to_f64().unwrap_or(f64::NAN);
        let exact_ok = exact_total == Exact::one();
        if !exact_ok && !((float_total - 1.0).abs() <= 1e-9 && is_float::<T>()) {
            return Err(Error::InvalidOperator(format!(
                "flip-count weights sum to {float_total}, not 1"
            )));
        }
        let mut cdf = Vec::with_capacity(radial.len());
        let mut acc = 0.0;
        for w in &radial {
            acc += w.to_f64().unwrap_or(0.0);
            cdf.push(acc);
        }
        let point_mass = radial.iter().position(|w| w.to_exact() == Exact::one());
        Ok(UnaryUnbiasedOperator {
            name: name.into(),
            radial,
            cdf,
            point_mass,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Search-space dimension the operator is defined for.
    pub fn n(&self) -> usize {
        self.radial.len() - 1
    }

    pub fn radial(&self) -> &[T] {
        &self.radial
    }

    pub fn weight(&self, flips: usize) -> T {
        self.radial.get(flips).cloned().unwrap_or_else(T::zero)
    }

    /// Draws a flip count.
    #[inline]
    pub fn sample_flips<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(c) = self.point_mass {
            return c;
        }
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf
            .partition_point(|&p| p <= u)
            .min(self.radial.len() - 1)
    }

    /// Applies the operator to `x`.
    pub fn apply<R: Rng + ?Sized>(&self, x: &BitString, rng: &mut R) -> BitString {
        let mut y = x.clone();
        self.apply_in_place(&mut y, rng);
        y
    }

    #[inline]
    pub fn apply_in_place<R: Rng + ?Sized>(&self, x: &mut BitString, rng: &mut R) {
        assert_eq!(x.len(), self.n(), "operator built for n = {}", self.n());
        let c = self.sample_flips(rng);
        flip_random_subset(x, c, rng);
    }

    /// Same law with exact rational weights.
    pub fn to_exact(&self) -> UnaryUnbiasedOperator<Exact> {
        let total: Exact = self.radial.iter().map(|w| w.to_exact()).sum();
        UnaryUnbiasedOperator::from_radial(
            self.name.clone(),
            self.radial.iter().map(|w| w.to_exact() / &total).collect(),
        )
        .expect("exact weights of a valid operator")
    }
}

fn is_float<T: Weight>() -> bool {
    // Exact scalars represent 1/3 exactly; floats do not.
    T::ratio(1, 3).to_exact() != Exact::new(BigInt::from(1), BigInt::from(3))
}

/// Flips a uniformly random `c`-subset of positions (Floyd's algorithm).
#[inline]
pub fn flip_random_subset<R: Rng + ?Sized>(x: &mut BitString, c: usize, rng: &mut R) {
    let n = x.len();
    debug_assert!(c <= n);
    match c {
        0 => {}
        1 => x.flip(rng.random_range(0..n)),
        _ if c == n => *x = x.complement(),
        _ => {
            let mut chosen = BitString::zeros(n);
            for j in (n - c)..n {
                let t = rng.random_range(0..=j);
                let pick = if chosen.get(t) { j } else { t };
                chosen.set(pick, true);
                x.flip(pick);
            }
        }
    }
}

/// Flip exactly one uniformly chosen bit.
pub fn one_bit_flip<T: Weight>(n: usize) -> Result<UnaryUnbiasedOperator<T>> {
    check_n(n)?;
    UnaryUnbiasedOperator::from_radial("one_bit_flip", point_mass(n, 1))
}

/// Uniform resampling: `C(n, c) / 2^n` for every `c`.
pub fn uniform_resample<T: Weight>(n: usize) -> Result<UnaryUnbiasedOperator<T>> {
    check_n(n)?;
    UnaryUnbiasedOperator::from_radial("uniform_resample", fair_binomial(n))
}

/// Standard bit mutation: each bit flips independently with probability `rate`.
pub fn standard_bit_mutation<T: Weight>(n: usize, rate: T) -> Result<UnaryUnbiasedOperator<T>> {
    check_n(n)?;
    if !(rate > T::zero() && rate < T::one()) {
        return Err(Error::InvalidOperator(format!(
            "mutation rate must lie in (0, 1), got {rate:?}"
        )));
    }
    let keep = T::one() - rate.clone();
    let radial = (0..=n)
        .map(|c| binomial::<T>(n, c) * pow(&rate, c) * pow(&keep, n - c))
        .collect();
    UnaryUnbiasedOperator::from_radial("standard_bit_mutation", radial)
}

/// Standard bit mutation at the customary rate `1/n`.
pub fn standard_bit_mutation_default<T: Weight>(n: usize) -> Result<UnaryUnbiasedOperator<T>> {
    if n < 2 {
        // rate 1/n = 1 is outside (0, 1); at n = 1 the operator flips the bit.
        check_n(n)?;
        return UnaryUnbiasedOperator::from_radial("standard_bit_mutation", point_mass(n, 1));
    }
    standard_bit_mutation(n, T::ratio(1, n as u64))
}

/// Equal mixture of a uniform sample, a one-bit flip and a `(k+1)`-bit flip.
pub fn mixed_jump_mutation<T: Weight>(n: usize, k: usize) -> Result<UnaryUnbiasedOperator<T>> {
    check_n(n)?;
    if 2 * k + 2 > n {
        return Err(Error::InvalidOperator(format!(
            "mixed jump mutation needs 0 <= k <= n/2 - 1, got n={n}, k={k}"
        )));
    }
    let third = T::ratio(1, 3);
    let mut radial: Vec<T> = fair_binomial::<T>(n)
        .into_iter()
        .map(|w| w * third.clone())
        .collect();
    radial[1] = radial[1].clone() + third.clone();
    radial[k + 1] = radial[k + 1].clone() + third;
    UnaryUnbiasedOperator::from_radial(format!("mixed_jump_mutation(k={k})"), radial)
}

/// Flip every bit.
pub fn complement_operator<T: Weight>(n: usize) -> Result<UnaryUnbiasedOperator<T>> {
    check_n(n)?;
    UnaryUnbiasedOperator::from_radial("complement", point_mass(n, n))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidOperator("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn point_mass<T: Weight>(n: usize, at: usize) -> Vec<T> {
    (0..=n)
        .map(|c| if c == at { T::one() } else { T::zero() })
        .collect()
}

fn fair_binomial<T: Weight>(n: usize) -> Vec<T> {
    let scale = pow(&T::ratio(1, 2), n);
    (0..=n)
        .map(|c| binomial::<T>(n, c) * scale.clone())
        .collect()
}

/// Exact transition law of a variation operator, for verification.
pub trait ExactLaw {
    fn law_name(&self) -> String;

    /// Every reachable `y` with its exact probability, for input `x`.
    fn outcomes(&self, x: &BitString) -> Vec<(BitString, Exact)>;
}

/// Largest `n` for which exhaustive verification is offered.
pub const MAX_EXHAUSTIVE_N: usize = 12;

type MaskLaw = Vec<(u64, Exact)>;

thread_local! {
    static SUBSET_LAW: std::cell::RefCell<HashMap<(usize, usize), MaskLaw>> =
        std::cell::RefCell::new(HashMap::new());
}

/// Exact distribution of the flip mask produced by [`flip_random_subset`],
/// obtained by running Floyd's algorithm symbolically over every draw.
pub fn subset_mask_law(n: usize, c: usize) -> Vec<(u64, Exact)> {
    assert!(n <= 63 && c <= n);
    if let Some(hit) = SUBSET_LAW.with(|m| m.borrow().get(&(n, c)).cloned()) {
        return hit;
    }
    let law: Vec<(u64, Exact)> = match c {
        0 => vec![(0, Exact::one())],
        1 => (0..n)
            .map(|i| (1u64 << i, Exact::new(BigInt::one(), BigInt::from(n))))
            .collect(),
        _ if c == n => vec![((1u64 << n) - 1, Exact::one())],
        _ => {
            let mut states: HashMap<u64, Exact> = HashMap::new();
            states.insert(0, Exact::one());
            for j in (n - c)..n {
                let p = Exact::new(BigInt::one(), BigInt::from(j + 1));
                let mut next: HashMap<u64, Exact> = HashMap::new();
                for (mask, prob) in states {
                    let step = &prob * &p;
                    for t in 0..=j {
                        let pick = if mask >> t & 1 == 1 { j } else { t };
                        *next.entry(mask | 1 << pick).or_insert_with(Exact::zero) += &step;
                    }
                }
                states = next;
            }
            let mut v: Vec<_> = states.into_iter().collect();
            v.sort_by_key(|(m, _)| *m);
            v
        }
    };
    SUBSET_LAW.with(|m| m.borrow_mut().insert((n, c), law.clone()));
    law
}

impl<T: Weight> ExactLaw for UnaryUnbiasedOperator<T> {
    fn law_name(&self) -> String {
        self.name.clone()
    }

    fn outcomes(&self, x: &BitString) -> Vec<(BitString, Exact)> {
        let n = self.n();
        assert!(n <= 63, "exact law limited to n <= 63");
        let base = x.words().first().copied().unwrap_or(0);
        // Sampling draws against the running total, so float weights that
        // miss 1 by rounding are renormalized here as well.
        let total: Exact = self.radial.iter().map(|w| w.to_exact()).sum();
        let mut acc: HashMap<u64, Exact> = HashMap::new();
        for (c, w) in self.radial.iter().enumerate() {
            let w = w.to_exact() / &total;
            if w.is_zero() {
                continue;
            }
            for (mask, p) in subset_mask_law(n, c) {
                *acc.entry(base ^ mask).or_insert_with(Exact::zero) += &w * &p;
            }
        }
        let mut out: Vec<_> = acc
            .into_iter()
            .map(|(y, p)| (BitString::from_u64(y, n), p))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Result of an exhaustive unbiasedness check.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasedReport {
    pub operator: String,
    pub n: usize,
    pub unbiased: bool,
    /// Exact `Pr[x -> y]` per distance, when distance-only.
    pub by_distance: Vec<Option<Exact>>,
    /// Some pair of transitions at equal distance with different probability.
    pub counterexample: Option<String>,
    pub rows_normalized: bool,
}

/// Computes `Pr[op(x) = y]` exactly for every pair in `{0,1}^n` and checks
/// that it depends on the Hamming distance alone.
pub fn verify_unbiased(op: &dyn ExactLaw, n: usize) -> Result<UnbiasedReport> {
    if n == 0 || n > MAX_EXHAUSTIVE_N {
        return Err(Error::InvalidOperator(format!(
            "exhaustive verification supports 1 <= n <= {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    let size = 1u64 << n;
    let mut by_distance: Vec<Option<Exact>> = vec![None; n + 1];
    let mut counterexample = None;
    let mut rows_normalized = true;
    for xv in 0..size {
        let x = BitString::from_u64(xv, n);
        let outcomes = op.outcomes(&x);
        let mut row: HashMap<u64, Exact> = HashMap::with_capacity(outcomes.len());
        let mut total = Exact::zero();
        for (y, p) in outcomes {
            if y.len() != n || p.is_negative() {
                return Err(Error::InvalidOperator(format!(
                    "{} produced an invalid outcome",
                    op.law_name()
                )));
            }
            total += &p;
            *row.entry(y.words().first().copied().unwrap_or(0))
                .or_insert_with(Exact::zero) += p;
        }
        if total != Exact::one() {
            rows_normalized = false;
        }
        for yv in 0..size {
            let d = (xv ^ yv).count_ones() as usize;
            let p = row.get(&yv).cloned().unwrap_or_else(Exact::zero);
            match &by_distance[d] {
                None => by_distance[d] = Some(p),
                Some(q) if *q != p => {
                    if counterexample.is_none() {
                        counterexample = Some(format!(
                            "Pr[{} -> {}] = {} but distance-{d} transitions elsewhere have {}",
                            x,
                            BitString::from_u64(yv, n),
                            p,
                            q
                        ));
                    }
                }
                Some(_) => {}
            }
        }
    }
    let unbiased = counterexample.is_none() && rows_normalized;
    if counterexample.is_some() {
        by_distance = vec![None; n + 1];
    }
    Ok(UnbiasedReport {
        operator: op.law_name(),
        n,
        unbiased,
        by_distance,
        counterexample,
        rows_normalized,
    })
}

/// Test operator that only ever flips position 0. Not unbiased.
#[derive(Debug, Clone, Copy)]
pub struct FirstBitFlip;

impl ExactLaw for FirstBitFlip {
    fn law_name(&self) -> String {
        "first_bit_flip".into()
    }

    fn outcomes(&self, x: &BitString) -> Vec<(BitString, Exact)> {
        vec![(x.flipped(0), Exact::one())]
    }
}

/// Every shipped operator at dimension `n`, in exact arithmetic.
pub fn registered_operators(n: usize) -> Result<Vec<UnaryUnbiasedOperator<Exact>>> {
    let mut ops = vec![
        one_bit_flip::<Exact>(n)?,
        uniform_resample::<Exact>(n)?,
        standard_bit_mutation_default::<Exact>(n)?,
        complement_operator::<Exact>(n)?,
    ];
    for k in 0..n / 2 {
        ops.push(mixed_jump_mutation::<Exact>(n, k)?);
    }
    Ok(ops)
}

/// Exact probability that `op` maps a point to one specific point at
/// distance `d`.
pub fn transition_probability<T: Weight>(op: &UnaryUnbiasedOperator<T>, d: usize) -> Exact {
    let n = op.n();
    if d > n {
        return Exact::zero();
    }
    op.weight(d).to_exact() / Exact::from_integer(binomial_big(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn q(a: u64, b: u64) -> Exact {
        Exact::ratio(a, b)
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let identity = UnaryUnbiasedOperator::<f64>::from_radial("id", point_mass(4, 0)).unwrap();
        assert_eq!(identity.apply(&bs("1010"), &mut rng), bs("1010"));
        let comp = complement_operator::<f64>(4).unwrap();
        assert_eq!(comp.apply(&bs("1010"), &mut rng), bs("0101"));

        let flip = one_bit_flip::<Exact>(4).unwrap();
        let law = flip.outcomes(&bs("0000"));
        assert_eq!(
            law,
            vec![
                (bs("1000"), q(1, 4)),
                (bs("0100"), q(1, 4)),
                (bs("0010"), q(1, 4)),
                (bs("0001"), q(1, 4)),
            ]
        );
    }

    #[test]
    fn one_bit_flip_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op1 = one_bit_flip::<f64>(1).unwrap();
        assert_eq!(op1.apply(&bs("0"), &mut rng), bs("1"));
        let op4 = one_bit_flip::<f64>(4).unwrap();
        for _ in 0..200 {
            let x = BitString::random(4, &mut rng);
            assert_eq!(op4.apply(&x, &mut rng).hamming(&x).unwrap(), 1);
        }
        let exact = one_bit_flip::<Exact>(4).unwrap();
        let law = exact.outcomes(&bs("1111"));
        assert!(law.contains(&(bs("0111"), q(1, 4))));
    }

    #[test]
    fn uniform_resample_examples() {
        let op = uniform_resample::<Exact>(2).unwrap();
        assert_eq!(op.radial(), &[q(1, 4), q(1, 2), q(1, 4)]);
        let op3 = uniform_resample::<Exact>(3).unwrap();
        for y in op3.outcomes(&bs("101")) {
            assert_eq!(y.1, q(1, 8));
        }
        let op1 = uniform_resample::<Exact>(1).unwrap();
        let a: Vec<_> = op1.outcomes(&bs("0")).into_iter().collect();
        let b: Vec<_> = op1.outcomes(&bs("1")).into_iter().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn standard_bit_mutation_examples() {
        let op = standard_bit_mutation::<Exact>(4, q(1, 4)).unwrap();
        assert_eq!(op.weight(0), q(81, 256));
        let total = op
            .radial()
            .iter()
            .cloned()
            .fold(Exact::zero(), |a, b| a + b);
        assert_eq!(total, Exact::one());
        let tiny = standard_bit_mutation::<f64>(4, 1e-9).unwrap();
        assert!(tiny.weight(0) > 1.0 - 1e-8);
        assert!(standard_bit_mutation::<f64>(4, 0.0).is_err());
        assert!(standard_bit_mutation::<f64>(4, 1.0).is_err());
        assert_eq!(
            standard_bit_mutation_default::<Exact>(4).unwrap().weight(0),
            q(81, 256)
        );
        // n = 1: rate 1/n degenerates to a certain flip
        assert_eq!(
            standard_bit_mutation_default::<Exact>(1).unwrap().radial(),
            &[q(0, 1), q(1, 1)]
        );
    }

    #[test]
    fn mixed_jump_examples() {
        let op = mixed_jump_mutation::<Exact>(8, 2).unwrap();
        assert_eq!(op.weight(3), q(1, 3) + q(1, 3) * q(56, 256));
        for n in 2..12 {
            for k in 1..n / 2 {
                let op = mixed_jump_mutation::<Exact>(n, k).unwrap();
                assert!(op.weight(1) >= q(1, 3));
            }
        }
        let op16 = mixed_jump_mutation::<Exact>(16, 2).unwrap();
        assert_eq!(
            transition_probability(&op16, 3),
            q(1, 3) * q(1, 560) + q(1, 3) * q(1, 65536)
        );
        assert!(mixed_jump_mutation::<f64>(8, 4).is_err());
    }

    #[test]
    fn verify_examples() {
        assert!(
            verify_unbiased(&one_bit_flip::<Exact>(4).unwrap(), 4)
                .unwrap()
                .unbiased
        );
        assert!(
            verify_unbiased(&uniform_resample::<Exact>(3).unwrap(), 3)
                .unwrap()
                .unbiased
        );
        let biased = verify_unbiased(&FirstBitFlip, 4).unwrap();
        assert!(!biased.unbiased);
        assert!(biased.counterexample.is_some());
        assert!(verify_unbiased(&FirstBitFlip, 13).is_err());
    }

    #[test]
    fn float_operator_verifies_through_exact_conversion() {
        let op = mixed_jump_mutation::<f64>(6, 1).unwrap();
        assert!(verify_unbiased(&op, 6).unwrap().unbiased);
    }

    #[test]
    fn hit_probability_never_exceeds_inverse_binomial() {
        for n in 1..=10 {
            for op in registered_operators(n).unwrap() {
                let report = verify_unbiased(&op, n).unwrap();
                assert!(report.unbiased, "{} at n={n}", op.name());
                for (d, p) in report.by_distance.iter().enumerate() {
                    let bound = Exact::new(BigInt::one(), binomial_big(n, d));
                    assert!(p.as_ref().unwrap() <= &bound, "{} n={n} d={d}", op.name());
                }
            }
        }
    }

    #[test]
    fn floyd_law_is_uniform_over_subsets() {
        for n in 1..=10 {
            for c in 0..=n {
                let law = subset_mask_law(n, c);
                assert_eq!(
                    law.len() as u128,
                    crate::scalar::binomial_u128(n as u64, c as u64).unwrap()
                );
                let expect = Exact::new(BigInt::one(), binomial_big(n, c));
                assert!(law
                    .iter()
                    .all(|(m, p)| m.count_ones() as usize == c && *p == expect));
            }
        }
    }

    #[test]
    fn empirical_flip_counts_match_radial() {
        let n = 16;
        let ops: Vec<UnaryUnbiasedOperator<f64>> = vec![
            one_bit_flip(n).unwrap(),
            uniform_resample(n).unwrap(),
            standard_bit_mutation_default(n).unwrap(),
            mixed_jump_mutation(n, 2).unwrap(),
            mixed_jump_mutation(n, 7).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let samples = 100_000;
        for op in ops {
            let x = BitString::random(n, &mut rng);
            let mut counts = vec![0u64; n + 1];
            for _ in 0..samples {
                counts[op.apply(&x, &mut rng).hamming(&x).unwrap()] += 1;
            }
            // pool cells with expected count < 5 into one bin
            let mut stat = 0.0;
            let mut cells = 0usize;
            let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
            for (c, &count) in counts.iter().enumerate() {
                let expected = op.weight(c) * samples as f64;
                let observed = count as f64;
                if expected == 0.0 {
                    assert_eq!(count, 0, "{} produced impossible count {c}", op.name());
                } else if expected < 5.0 {
                    pooled_obs += observed;
                    pooled_exp += expected;
                } else {
                    stat += (observed - expected).powi(2) / expected;
                    cells += 1;
                }
            }
            if pooled_exp > 0.0 {
                stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
                cells += 1;
            }
            if cells > 1 {
                let chi = ChiSquared::new((cells - 1) as f64).unwrap();
                let p_value = 1.0 - chi.cdf(stat);
                assert!(
                    p_value > 1e-3,
                    "{}: chi2 = {stat}, p = {p_value}",
                    op.name()
                );
            }
        }
    }
}
