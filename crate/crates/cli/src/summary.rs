//! JSON run summaries.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use elitist_lab::lab::{
    estimate_las_vegas, estimate_monte_carlo, loop_fraction, success_fraction, TrialRecord,
};

use crate::config::ConfigEcho;
use crate::records::CsvRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ConfigEcho,
    pub las_vegas: LasVegasSummary,
    pub monte_carlo: Vec<MonteCarloSummary>,
    pub loop_fraction: f64,
    pub success_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasVegasSummary {
    pub mean: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Number of censored trials.
    pub censored: usize,
    pub is_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub p: f64,
    #[serde(rename = "T")]
    pub t: u64,
    /// Success fraction reached within `T` evaluations.
    pub achieved: f64,
    pub not_achieved_flag: bool,
}

impl Summary {
    pub fn monte_carlo_for(&self, p: f64) -> Option<&MonteCarloSummary> {
        self.monte_carlo.iter().find(|m| m.p == p)
    }
}

/// Estimates over `records`, using the budget and p values of `config`.
pub fn summarize(config: ConfigEcho, records: &[TrialRecord]) -> Result<Summary> {
    let lv = estimate_las_vegas::<f64>(records)?;
    let monte_carlo = config
        .p
        .iter()
        .map(|&p| {
            let mc = estimate_monte_carlo::<f64>(records, p, config.budget)?;
            Ok(MonteCarloSummary {
                p,
                t: mc.t,
                achieved: mc.achieved_success_fraction,
                not_achieved_flag: mc.not_achieved(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Summary {
        config,
        las_vegas: LasVegasSummary {
            mean: lv.mean,
            ci_low: lv.ci_low,
            ci_high: lv.ci_high,
            censored: lv.censored_count,
            is_lower_bound: lv.is_lower_bound,
        },
        monte_carlo,
        loop_fraction: loop_fraction(records),
        success_fraction: success_fraction(records),
    })
}

/// Rebuilds summaries from CSV rows, one per series and `n`. Without an
/// explicit budget the largest recorded query count stands in for it.
pub fn summarize_rows(rows: &[CsvRecord], p: &[f64], budget: Option<u64>) -> Result<Vec<Summary>> {
    if rows.is_empty() {
        bail!("no records");
    }
    let mut groups: BTreeMap<_, Vec<&CsvRecord>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.series_key(), row.n))
            .or_default()
            .push(row);
    }
    groups
        .into_iter()
        .map(|((key, n), group)| {
            let records: Vec<TrialRecord> = group.iter().map(|r| r.trial_record()).collect();
            let max_queries = records.iter().map(|r| r.queries).max().unwrap_or(0);
            let budget = match budget {
                Some(b) if b < max_queries => {
                    bail!("budget {b} is below a recorded query count {max_queries}")
                }
                Some(b) => b,
                None => max_queries.max(1),
            };
            let echo = ConfigEcho {
                problem: key.problem,
                n,
                k: key.param_k,
                algorithm: key.algorithm,
                tie_policy: key.tie_policy,
                fitness_view: key.fitness_view,
                trials: records.len() as u64,
                budget,
                seed: None,
                p: p.to_vec(),
                instance: None,
            };
            summarize(echo, &records)
        })
        .collect()
}
