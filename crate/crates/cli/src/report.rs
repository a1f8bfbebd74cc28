//! Measured-versus-reference tables, one per experiment series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use clap::ValueEnum;

use elitist_lab::scalar::binomial;

use crate::records::SeriesKey;
use crate::summary::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    /// Aligned plain-text tables.
    #[default]
    Table,
    /// A single CSV with the series columns repeated on every row.
    Csv,
}

/// Reference scale for a family at dimension `n`.
pub fn reference(problem: &str, n: usize, k: Option<usize>) -> Option<(&'static str, f64)> {
    let nf = n as f64;
    match (problem, k) {
        ("jump", Some(k)) if k < n => Some(("C(n,k+1)", binomial::<f64>(n, k + 1))),
        ("onemax" | "doubleonemax", _) => Some(("n*ln(n)", nf * nf.ln())),
        ("hiddenpath", _) => Some(("n^2", nf * nf)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub trials: u64,
    pub success_fraction: f64,
    pub mean: f64,
    pub is_lower_bound: bool,
    /// `T` per p of the table, `None` when the summary lacks that p.
    pub t: Vec<Option<u64>>,
    pub not_achieved: Vec<Option<bool>>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub key: SeriesKey,
    pub p_values: Vec<f64>,
    pub reference_label: Option<&'static str>,
    pub rows: Vec<ReportRow>,
}

fn key_of(s: &Summary) -> SeriesKey {
    SeriesKey {
        problem: s.config.problem.clone(),
        param_k: s.config.k,
        algorithm: s.config.algorithm.clone(),
        tie_policy: s.config.tie_policy.clone(),
        fitness_view: s.config.fitness_view.clone(),
    }
}

/// Groups summaries into series and sorts each by `n`.
pub fn build_tables(summaries: &[Summary]) -> Result<Vec<SeriesTable>> {
    if summaries.is_empty() {
        bail!("empty series: no summaries to report");
    }
    let mut groups: BTreeMap<SeriesKey, Vec<&Summary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(key_of(s)).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by_key(|s| s.config.n);
            if let Some(w) = members.windows(2).find(|w| w[0].config.n == w[1].config.n) {
                bail!("series {key:?} has two entries for n = {}", w[0].config.n);
            }
            let mut p_values: Vec<f64> = Vec::new();
            for s in &members {
                for m in &s.monte_carlo {
                    if !p_values.contains(&m.p) {
                        p_values.push(m.p);
                    }
                }
            }
            p_values.sort_by(f64::total_cmp);
            let rows = members
                .iter()
                .map(|s| {
                    let mc: Vec<_> = p_values.iter().map(|&p| s.monte_carlo_for(p)).collect();
                    ReportRow {
                        n: s.config.n,
                        trials: s.config.trials,
                        success_fraction: s.success_fraction,
                        mean: s.las_vegas.mean,
                        is_lower_bound: s.las_vegas.is_lower_bound,
                        t: mc.iter().map(|m| m.map(|m| m.t)).collect(),
                        not_achieved: mc.iter().map(|m| m.map(|m| m.not_achieved_flag)).collect(),
                        reference: reference(&key.problem, s.config.n, key.param_k).map(|r| r.1),
                    }
                })
                .collect();
            Ok(SeriesTable {
                reference_label: reference(&key.problem, 4, key.param_k).map(|r| r.0),
                key,
                p_values,
                rows,
            })
        })
        .collect()
}

impl SeriesTable {
    fn title(&self) -> String {
        let k = self
            .key
            .param_k
            .map(|k| format!(" k={k}"))
            .unwrap_or_default();
        format!(
            "{}{} / {} / tie={} / view={}",
            self.key.problem, k, self.key.algorithm, self.key.tie_policy, self.key.fitness_view
        )
    }

    /// Column names; `flags` adds a 0/1 not-achieved column per p instead of
    /// marking `T` in place.
    fn header(&self, flags: bool) -> Vec<String> {
        let mut h: Vec<String> = ["n", "trials", "success_fraction", "mean", "lower_bound"]
            .map(String::from)
            .into();
        for p in &self.p_values {
            h.push(format!("T(p={p})"));
            if flags {
                h.push(format!("not_achieved(p={p})"));
            }
        }
        if let Some(label) = self.reference_label {
            h.push(format!("ref {label}"));
            h.push("mean/ref".into());
        }
        h
    }

    fn cells(&self, row: &ReportRow, flags: bool) -> Vec<String> {
        let mut c = vec![
            row.n.to_string(),
            row.trials.to_string(),
            row.success_fraction.to_string(),
            row.mean.to_string(),
            u8::from(row.is_lower_bound).to_string(),
        ];
        for (t, na) in row.t.iter().zip(&row.not_achieved) {
            let t = t.map(|t| t.to_string());
            if flags {
                c.push(t.unwrap_or_default());
                c.push(na.map(|na| u8::from(na).to_string()).unwrap_or_default());
            } else {
                let mark = if *na == Some(true) { "!" } else { "" };
                c.push(t.map(|t| t + mark).unwrap_or_else(|| "-".into()));
            }
        }
        if self.reference_label.is_some() {
            let r = row.reference.unwrap_or(f64::NAN);
            c.push(r.to_string());
            c.push((row.mean / r).to_string());
        }
        c
    }
}

pub fn render(tables: &[SeriesTable], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(render_text(tables)),
        ReportFormat::Csv => render_csv(tables),
    }
}

fn render_text(tables: &[SeriesTable]) -> String {
    let mut out = String::new();
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let header = table.header(false);
        let body: Vec<Vec<String>> = table.rows.iter().map(|r| table.cells(r, false)).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| {
                body.iter()
                    .map(|r| r[j].len())
                    .chain([header[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let _ = writeln!(out, "# {}", table.title());
        for line in std::iter::once(&header).chain(&body) {
            let padded: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        }
    }
    if tables.iter().any(|t| {
        t.rows
            .iter()
            .flat_map(|r| &r.not_achieved)
            .any(|na| *na == Some(true))
    }) {
        out.push_str("\n! success fraction 1-p not reached within the budget; T is the budget\n");
    }
    out
}

fn render_csv(tables: &[SeriesTable]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for table in tables {
        let mut header: Vec<String> = [
            "problem",
            "param_k",
            "algorithm",
            "tie_policy",
            "fitness_view",
        ]
        .map(String::from)
        .into();
        header.extend(table.header(true));
        w.write_record(&header)?;
        for row in &table.rows {
            let mut line = vec![
                table.key.problem.clone(),
                table.key.param_k.map(|k| k.to_string()).unwrap_or_default(),
                table.key.algorithm.clone(),
                table.key.tie_policy.clone(),
                table.key.fitness_view.clone(),
            ];
            line.extend(table.cells(row, true));
            w.write_record(&line)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
