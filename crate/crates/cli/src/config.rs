//! Experiment configuration from flags and `key=value` files.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use elitist_lab::algorithms::AlgorithmId;
use elitist_lab::lab::TrialConfig;
use elitist_lab::{Family, FitnessView, ProblemInstance, TiePolicy};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ELITIST_LAB_OUT";

pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_P: [f64; 2] = [0.1, 0.5];

/// Experiment settings as given, before defaults and validation. Every field
/// doubles as a config-file key (`tie-policy` and `tie_policy` both work).
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Problem family: onemax, doubleonemax, hiddenpath, jump.
    #[arg(long)]
    pub problem: Option<String>,
    /// Bit-string length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Jump gap parameter.
    #[arg(long)]
    pub k: Option<usize>,
    /// Algorithm id (see `list`).
    #[arg(long)]
    pub algorithm: Option<String>,
    /// prefer_offspring, prefer_parent or uniform_random.
    #[arg(long)]
    pub tie_policy: Option<String>,
    /// absolute, ranking or comparison.
    #[arg(long)]
    pub fitness_view: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Evaluation budget per trial.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Failure probabilities for Monte Carlo estimates, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File stem for the CSV and JSON outputs.
    #[arg(long)]
    pub name: Option<String>,
    /// Fixed instance record, e.g. "onemax n=8 z=a5".
    #[arg(long)]
    pub instance: Option<String>,
}

impl Settings {
    /// Parses a config file: one `key = value` per line, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", lineno + 1);
            };
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            if !seen.insert(key.clone()) {
                bail!("line {}: duplicate key {key:?}", lineno + 1);
            }
            let number = |v: &str| -> Result<u64> {
                v.parse()
                    .with_context(|| format!("line {}: {key} must be an integer", lineno + 1))
            };
            match key.as_str() {
                "problem" => s.problem = Some(value.into()),
                "n" => s.n = Some(number(value)? as usize),
                "k" => s.k = Some(number(value)? as usize),
                "algorithm" => s.algorithm = Some(value.into()),
                "tie-policy" => s.tie_policy = Some(value.into()),
                "fitness-view" => s.fitness_view = Some(value.into()),
                "trials" => s.trials = Some(number(value)?),
                "budget" => s.budget = Some(number(value)?),
                "seed" => s.seed = Some(number(value)?),
                "p" => {
                    s.p = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .with_context(|| format!("line {}: bad p list", lineno + 1))?
                }
                "out" => s.out = Some(value.into()),
                "name" => s.name = Some(value.into()),
                "instance" => s.instance = Some(value.into()),
                other => bail!("line {}: unknown key {other:?}", lineno + 1),
            }
        }
        Ok(s)
    }

    /// Field-wise merge where `self` wins.
    pub fn or(self, lower: Settings) -> Settings {
        Settings {
            problem: self.problem.or(lower.problem),
            n: self.n.or(lower.n),
            k: self.k.or(lower.k),
            algorithm: self.algorithm.or(lower.algorithm),
            tie_policy: self.tie_policy.or(lower.tie_policy),
            fitness_view: self.fitness_view.or(lower.fitness_view),
            trials: self.trials.or(lower.trials),
            budget: self.budget.or(lower.budget),
            seed: self.seed.or(lower.seed),
            p: if self.p.is_empty() { lower.p } else { self.p },
            out: self.out.or(lower.out),
            name: self.name.or(lower.name),
            instance: self.instance.or(lower.instance),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub algorithm: AlgorithmId,
    pub tie_policy: TiePolicy,
    pub fitness_view: FitnessView,
    pub trials: u64,
    pub budget: u64,
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub out_dir: PathBuf,
    pub name: String,
    pub instance: Option<ProblemInstance>,
}

impl ExperimentConfig {
    /// Applies defaults and checks the result against the algorithm registry
    /// and the family constraints. `env_out` is the fallback output directory.
    pub fn resolve(s: Settings, env_out: Option<PathBuf>) -> Result<Self> {
        let problem = s.problem.context("missing problem")?;
        let n = s.n.context("missing n")?;
        let algorithm: AlgorithmId = s.algorithm.context("missing algorithm")?.parse()?;
        let family = Family::parse(&problem, s.k)?;
        if s.k.is_some() && family.k().is_none() {
            bail!("k is only meaningful for jump");
        }
        let p_values = if s.p.is_empty() {
            DEFAULT_P.to_vec()
        } else {
            s.p
        };
        if let Some(bad) = p_values.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            bail!("p values must lie in (0, 1), got {bad}");
        }
        let instance = s
            .instance
            .as_deref()
            .map(str::parse::<ProblemInstance>)
            .transpose()?;
        let mut trial = TrialConfig::new(algorithm, family, n)
            .trials(s.trials.unwrap_or(DEFAULT_TRIALS))
            .budget(s.budget.unwrap_or(DEFAULT_BUDGET))
            .seed(s.seed.unwrap_or(0));
        if let Some(view) = &s.fitness_view {
            trial = trial.fitness_view(view.parse()?);
        }
        if let Some(tie) = &s.tie_policy {
            trial = trial.tie_policy(tie.parse()?);
        }
        if let Some(inst) = instance.clone() {
            trial = trial.instance(inst);
        }
        let (_, mode) = trial.prepare()?;
        let name = match s.name {
            Some(name) if name.is_empty() || name.contains(['/', '\\']) => {
                bail!("name must be a plain file stem, got {name:?}")
            }
            Some(name) => name,
            None => match family.k() {
                Some(k) => format!("{}-n{n}-k{k}-{algorithm}", family.name()),
                None => format!("{}-n{n}-{algorithm}", family.name()),
            },
        };
        Ok(ExperimentConfig {
            family,
            n,
            algorithm,
            tie_policy: mode.tie_policy,
            fitness_view: mode.fitness_view,
            trials: trial.trials,
            budget: trial.budget,
            seed: trial.master_seed,
            p_values,
            out_dir: s
                .out
                .or(env_out)
                .unwrap_or_else(|| PathBuf::from("results")),
            name,
            instance,
        })
    }

    pub fn trial_config(&self) -> TrialConfig {
        let mut trial = TrialConfig::new(self.algorithm, self.family, self.n)
            .trials(self.trials)
            .budget(self.budget)
            .seed(self.seed)
            .fitness_view(self.fitness_view)
            .tie_policy(self.tie_policy);
        if let Some(inst) = self.instance.clone() {
            trial = trial.instance(inst);
        }
        trial
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.csv", self.name))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.json", self.name))
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            problem: self.family.name().into(),
            n: self.n,
            k: self.family.k(),
            algorithm: self.algorithm.to_string(),
            tie_policy: self.tie_policy.to_string(),
            fitness_view: self.fitness_view.to_string(),
            trials: self.trials,
            budget: self.budget,
            seed: Some(self.seed),
            p: self.p_values.clone(),
            instance: self.instance.as_ref().map(|i| i.to_record()),
        }
    }
}

/// The configuration as written into a summary.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub n: usize,
    pub k: Option<usize>,
    pub algorithm: String,
    pub tie_policy: String,
    pub fitness_view: String,
    pub trials: u64,
    pub budget: u64,
    /// Unknown when the summary was rebuilt from a record file.
    pub seed: Option<u64>,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
}
