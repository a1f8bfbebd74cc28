//! Batch experiment driver for `elitist-lab`.
//!
//! Subcommands: `run` (trials to CSV plus JSON summary), `estimate` (summary
//! from a record file), `report` (tables per series), `verify-operators`,
//! `demo-stuck` and `list`.

pub mod config;
pub mod records;
pub mod report;
pub mod summary;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use rayon::ThreadPool;

use elitist_lab::algorithms::AlgorithmId;
use elitist_lab::lab::{clopper_pearson, run_trials, TrialConfig};
use elitist_lab::operators::{
    registered_operators, verify_unbiased, ExactLaw, FirstBitFlip, MAX_EXHAUSTIVE_N,
};
use elitist_lab::{Family, FitnessView, Policy, TiePolicy};

use config::{ExperimentConfig, Settings, OUT_DIR_ENV};
use records::{read_records, write_records, CsvRecord};
use report::{build_tables, render, ReportFormat};
use summary::{summarize, summarize_rows, Summary};

#[derive(Debug, Parser)]
#[command(
    name = "elitist-lab",
    version,
    about = "Elitist black-box runtime experiments"
)]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run trials, write per-trial CSV and a JSON summary.
    Run(RunArgs),
    /// Rebuild summaries from a record CSV.
    Estimate(EstimateArgs),
    /// Tables of measured values against reference scales.
    Report(ReportArgs),
    /// Exhaustively check every operator for unbiasedness.
    VerifyOperators(VerifyArgs),
    /// Loop fraction of the deterministic stuck policy on OneMax.
    DemoStuck(DemoArgs),
    /// List algorithms, families, views, tie policies and operators.
    List,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Record CSV written by `run`.
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Budget the trials ran under; defaults to the largest recorded count.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Write the JSON here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary JSON files or record CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
    /// p values for CSV inputs.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Budget for CSV inputs.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Adds a deliberately biased operator to the registry.
    #[arg(long, hide = true)]
    pub inject_biased: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` and runs the command, reading the output directory default
/// from the environment. Returns whether every check passed.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> Result<bool>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(cli, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from), out)
}

pub fn execute(cli: Cli, env_out: Option<PathBuf>, out: &mut dyn Write) -> Result<bool> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .context("cannot build worker pool")?;
    match cli.command {
        Command::Run(args) => cmd_run(args, env_out, &pool, out),
        Command::Estimate(args) => cmd_estimate(args, out),
        Command::Report(args) => cmd_report(args, out),
        Command::VerifyOperators(args) => cmd_verify_operators(&args, &pool, out),
        Command::DemoStuck(args) => cmd_demo_stuck(&args, &pool, out),
        Command::List => cmd_list(out),
    }
}

/// Validates the whole configuration, runs it, and only then writes files.
pub fn cmd_run(
    args: RunArgs,
    env_out: Option<PathBuf>,
    pool: &ThreadPool,
    out: &mut dyn Write,
) -> Result<bool> {
    let settings = match &args.config {
        Some(path) => args.settings.or(Settings::from_file(path)?),
        None => args.settings,
    };
    let config = ExperimentConfig::resolve(settings, env_out)?;
    let records = pool.install(|| run_trials(&config.trial_config()))?;
    let summary = summarize(config.echo(), &records)?;
    let rows: Vec<CsvRecord> = records.iter().map(|r| CsvRecord::new(&config, r)).collect();

    fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("cannot create {}", config.out_dir.display()))?;
    write_atomically(&config.csv_path(), |w| write_records(w, &rows))?;
    write_atomically(&config.summary_path(), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        Ok(())
    })?;

    writeln!(
        out,
        "{} on {} n={}: {} trials, success {}, mean {}{}",
        config.algorithm,
        config.family,
        config.n,
        config.trials,
        summary.success_fraction,
        summary.las_vegas.mean,
        if summary.las_vegas.is_lower_bound {
            " (lower bound)"
        } else {
            ""
        }
    )?;
    for mc in &summary.monte_carlo {
        let flag = if mc.not_achieved_flag {
            " not achieved"
        } else {
            ""
        };
        writeln!(
            out,
            "  p={} T={} achieved={}{flag}",
            mc.p, mc.t, mc.achieved
        )?;
    }
    writeln!(out, "wrote {}", config.csv_path().display())?;
    writeln!(out, "wrote {}", config.summary_path().display())?;
    Ok(true)
}

fn write_atomically(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| -> Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    })();
    match result.and_then(|()| fs::rename(&tmp, path).map_err(Into::into)) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e).with_context(|| format!("cannot write {}", path.display()))
        }
    }
}

fn p_or_default(p: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        bail!("p values must lie in (0, 1), got {bad}");
    }
    Ok(if p.is_empty() {
        config::DEFAULT_P.to_vec()
    } else {
        p
    })
}

fn load_rows(path: &Path) -> Result<Vec<CsvRecord>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_records(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

pub fn cmd_estimate(args: EstimateArgs, out: &mut dyn Write) -> Result<bool> {
    let p = p_or_default(args.p)?;
    let rows = load_rows(&args.input)?;
    let summaries = summarize_rows(&rows, &p, args.budget)
        .with_context(|| format!("in {}", args.input.display()))?;
    let json = serde_json::to_string_pretty(&summaries)? + "\n";
    match args.output {
        Some(path) => write_atomically(&path, |w| Ok(w.write_all(json.as_bytes())?))?,
        None => out.write_all(json.as_bytes())?,
    }
    Ok(true)
}

/// Loads summaries from JSON files (one summary or an array of them) or
/// rebuilds them from record CSVs.
pub fn load_summaries(paths: &[PathBuf], p: &[f64], budget: Option<u64>) -> Result<Vec<Summary>> {
    let mut all = Vec::new();
    for path in paths {
        if path.extension().is_some_and(|e| e == "csv") {
            let rows = load_rows(path)?;
            all.extend(
                summarize_rows(&rows, p, budget)
                    .with_context(|| format!("in {}", path.display()))?,
            );
            continue;
        }
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("bad JSON in {}", path.display()))?;
        let parsed = if value.is_array() {
            serde_json::from_value::<Vec<Summary>>(value)
        } else {
            serde_json::from_value::<Summary>(value).map(|s| vec![s])
        };
        all.extend(parsed.with_context(|| format!("{} is not a run summary", path.display()))?);
    }
    Ok(all)
}

pub fn cmd_report(args: ReportArgs, out: &mut dyn Write) -> Result<bool> {
    let p = p_or_default(args.p)?;
    let summaries = load_summaries(&args.inputs, &p, args.budget)?;
    let text = render(&build_tables(&summaries)?, args.format)?;
    match args.output {
        Some(path) => write_atomically(&path, |w| Ok(w.write_all(text.as_bytes())?))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(true)
}

pub fn cmd_verify_operators(
    args: &VerifyArgs,
    pool: &ThreadPool,
    out: &mut dyn Write,
) -> Result<bool> {
    if args.n_min == 0 || args.n_min > args.n_max || args.n_max > MAX_EXHAUSTIVE_N {
        bail!(
            "need 1 <= n-min <= n-max <= {MAX_EXHAUSTIVE_N}, got {}..={}",
            args.n_min,
            args.n_max
        );
    }
    let mut jobs = Vec::new();
    for n in args.n_min..=args.n_max {
        for op in registered_operators(n)? {
            jobs.push((n, Box::new(op) as Box<dyn ExactLaw + Send + Sync>));
        }
        if args.inject_biased {
            jobs.push((n, Box::new(FirstBitFlip)));
        }
    }
    let reports = pool.install(|| {
        jobs.par_iter()
            .map(|(n, op)| verify_unbiased(op.as_ref(), *n))
            .collect::<elitist_lab::Result<Vec<_>>>()
    })?;
    let mut failures = 0;
    for r in &reports {
        if r.unbiased {
            writeln!(out, "ok    n={} {}", r.n, r.operator)?;
        } else {
            failures += 1;
            let why = r
                .counterexample
                .clone()
                .unwrap_or_else(|| "transition rows do not sum to 1".into());
            writeln!(out, "FAIL  n={} {}: {why}", r.n, r.operator)?;
        }
    }
    writeln!(out, "{} checks, {failures} failed", reports.len())?;
    Ok(failures == 0)
}

pub fn cmd_demo_stuck(args: &DemoArgs, pool: &ThreadPool, out: &mut dyn Write) -> Result<bool> {
    let config = TrialConfig::new(AlgorithmId::StuckDemo, Family::OneMax, args.n)
        .trials(args.instances)
        .budget(1000)
        .seed(args.seed);
    let records = pool.install(|| run_trials(&config))?;
    let looped = records.iter().filter(|r| r.looped).count() as u64;
    let (lo, hi) = clopper_pearson(looped, args.instances, 0.05)?;
    writeln!(
        out,
        "stuck-demo on onemax n={}: loop fraction {} ({looped}/{}), 95% exact CI [{lo:.4}, {hi:.4}]",
        args.n,
        looped as f64 / args.instances as f64,
        args.instances
    )?;
    Ok(true)
}

pub fn cmd_list(out: &mut dyn Write) -> Result<bool> {
    writeln!(out, "algorithms:")?;
    for id in AlgorithmId::ALL {
        let spec = id.build(8, Some(1))?.spec();
        let views: Vec<&str> = spec.views.iter().map(|v| v.as_str()).collect();
        writeln!(
            out,
            "  {:<16} ({}+{}) views: {:<30} {}",
            id.as_str(),
            spec.mu,
            spec.lambda,
            views.join(","),
            id.description()
        )?;
    }
    writeln!(out, "problems:")?;
    writeln!(out, "  onemax          any n >= 1")?;
    writeln!(out, "  doubleonemax    any n >= 1")?;
    writeln!(out, "  hiddenpath      n divisible by 4")?;
    writeln!(out, "  jump            --k with 0 <= k <= n/2 - 1")?;
    let views = [
        FitnessView::Absolute,
        FitnessView::Ranking,
        FitnessView::Comparison,
    ];
    writeln!(
        out,
        "fitness views: {}",
        views.map(|v| v.as_str()).join(", ")
    )?;
    let ties = [
        TiePolicy::PreferOffspring,
        TiePolicy::PreferParent,
        TiePolicy::UniformRandom,
    ];
    writeln!(out, "tie policies: {}", ties.map(|t| t.as_str()).join(", "))?;
    writeln!(out, "operators:")?;
    let mut names: Vec<String> = registered_operators(4)?
        .iter()
        .map(|op| op.name().split('(').next().unwrap_or_default().to_string())
        .collect();
    names.dedup();
    for name in names {
        writeln!(out, "  {name}")?;
    }
    Ok(true)
}
