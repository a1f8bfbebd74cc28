//! A laboratory for elitist black-box optimization.
//!
//! The crate enforces the (μ+λ) elitist black-box game between algorithm
//! policies and hidden problem instances, ships the OneMax, DoubleOneMax,
//! HiddenPath and Jump families, unary unbiased operators in radial form
//! with an exact unbiasedness verifier, and estimators for Las Vegas and
//! p-Monte Carlo runtimes.
//!
//! Probability weights and estimator statistics are generic over the scalar
//! type (see [`scalar::Weight`] and [`num_traits::Float`]); the aliases below
//! fix the common choices.

pub mod algorithms;
pub mod bits;
pub mod error;
pub mod lab;
pub mod model;
pub mod operators;
pub mod problems;
pub mod scalar;

pub use bits::{hamming, BitString};
pub use error::{Error, Result};
pub use model::{
    elitist_select, rank_population, run_game, run_game_observed, Fitness, FitnessView, GameRng,
    ModelMode, Policy, PopulationView, Ranking, RunOutcome, TiePolicy,
};
pub use problems::{Family, Problem, ProblemInstance};
pub use scalar::{Exact, Weight};

/// Operator with `f64` weights, used for sampling.
pub type Operator = operators::UnaryUnbiasedOperator<f64>;
/// Operator with exact rational weights, used for verification.
pub type ExactOperator = operators::UnaryUnbiasedOperator<Exact>;
/// Las Vegas estimate in `f64`.
pub type LasVegasEstimate = lab::LasVegasEstimate<f64>;
/// Monte Carlo estimate in `f64`.
pub type MonteCarloEstimate = lab::MonteCarloEstimate<f64>;
