//! Per-trial CSV records.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use elitist_lab::lab::TrialRecord;

use crate::config::ExperimentConfig;

/// Column order of the record file.
pub const CSV_HEADER: [&str; 12] = [
    "problem",
    "n",
    "param_k",
    "algorithm",
    "tie_policy",
    "fitness_view",
    "trial",
    "seed",
    "queries",
    "success",
    "censored",
    "looped",
];

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub problem: String,
    pub n: usize,
    pub param_k: Option<usize>,
    pub algorithm: String,
    pub tie_policy: String,
    pub fitness_view: String,
    pub trial: u64,
    pub seed: u64,
    pub queries: u64,
    #[serde(with = "bit")]
    pub success: bool,
    #[serde(with = "bit")]
    pub censored: bool,
    #[serde(with = "bit")]
    pub looped: bool,
}

mod bit {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(D::Error::custom(format!("expected 0 or 1, got {other}"))),
        }
    }
}

impl CsvRecord {
    pub fn new(config: &ExperimentConfig, r: &TrialRecord) -> Self {
        CsvRecord {
            problem: config.family.name().into(),
            n: config.n,
            param_k: config.family.k(),
            algorithm: config.algorithm.to_string(),
            tie_policy: config.tie_policy.to_string(),
            fitness_view: config.fitness_view.to_string(),
            trial: r.trial_index,
            seed: r.seed,
            queries: r.queries,
            success: r.success,
            censored: r.censored,
            looped: r.looped,
        }
    }

    pub fn trial_record(&self) -> TrialRecord {
        TrialRecord {
            trial_index: self.trial,
            seed: self.seed,
            queries: self.queries,
            success: self.success,
            censored: self.censored,
            looped: self.looped,
        }
    }

    /// Identifies the experiment series a row belongs to (everything but `n`
    /// and the per-trial columns).
    pub fn series_key(&self) -> SeriesKey {
        SeriesKey {
            problem: self.problem.clone(),
            param_k: self.param_k,
            algorithm: self.algorithm.clone(),
            tie_policy: self.tie_policy.clone(),
            fitness_view: self.fitness_view.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub problem: String,
    pub param_k: Option<usize>,
    pub algorithm: String,
    pub tie_policy: String,
    pub fitness_view: String,
}

pub fn write_records<W: Write>(out: W, rows: &[CsvRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().context("missing header row")?;
    if header.iter().ne(CSV_HEADER) {
        bail!(
            "unexpected header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            CSV_HEADER.join(",")
        );
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("bad record on data row {}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: Option<usize>, success: bool) -> CsvRecord {
        CsvRecord {
            problem: "jump".into(),
            n: 16,
            param_k: k,
            algorithm: "jump-mixed".into(),
            tie_policy: "prefer_offspring".into(),
            fitness_view: "absolute".into(),
            trial: 3,
            seed: u64::MAX,
            queries: 1234,
            success,
            censored: !success,
            looped: false,
        }
    }

    #[test]
    fn layout() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[row(Some(2), true), row(None, false)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(
            lines[1],
            "jump,16,2,jump-mixed,prefer_offspring,absolute,3,18446744073709551615,1234,1,0,0"
        );
        assert_eq!(
            lines[2],
            "jump,16,,jump-mixed,prefer_offspring,absolute,3,18446744073709551615,1234,0,1,0"
        );
    }

    #[test]
    fn round_trip() {
        let rows = vec![row(Some(2), true), row(None, false)];
        let mut buf = Vec::new();
        write_records(&mut buf, &rows).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
        let bad_bool = format!(
            "{}\njump,16,2,jump-mixed,prefer_offspring,absolute,0,1,5,2,0,0\n",
            CSV_HEADER.join(",")
        );
        assert!(read_records(bad_bool.as_bytes()).is_err());
    }
}
