//! Output formats. Everything written here is a deterministic function of the
//! inputs: no timestamps, no worker counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gsforest_core::{HeightProfile, LocalTimeProfile, SampledPath};
use serde::Serialize;
use serde_json::{json, Value};

use crate::experiments::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `replicate,value` rows, values in shortest round-trip form.
pub fn samples_csv(samples: &[f64]) -> String {
    let mut out = String::from("replicate,value\n");
    for (i, v) in samples.iter().enumerate() {
        writeln!(out, "{i},{v:?}").unwrap();
    }
    out
}

pub fn samples_json(samples: &[f64]) -> String {
    let rows: Vec<Value> = samples
        .iter()
        .enumerate()
        .map(|(i, v)| json!({ "replicate": i, "value": v }))
        .collect();
    serde_json::to_string_pretty(&rows).unwrap() + "\n"
}

pub fn parse_samples_csv(text: &str) -> Result<Vec<f64>, String> {
    let mut lines = text.lines();
    if lines.next() != Some("replicate,value") {
        return Err("missing header replicate,value".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected two fields", i + 2))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(format!("line {}: replicate index out of order", i + 2));
            }
            val.parse::<f64>()
                .map_err(|e| format!("line {}: {e}", i + 2))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryDoc<'a> {
    pub subcommand: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a Value,
    #[serde(flatten)]
    pub outcome: &'a Outcome,
    pub pass: bool,
}

pub fn summary_json(outcome: &Outcome, seed: u64, config: &Value) -> String {
    let doc = SummaryDoc {
        subcommand: &outcome.subcommand,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
        outcome,
        pass: outcome.pass(),
    };
    serde_json::to_string_pretty(&doc).unwrap() + "\n"
}

/// Write `<dir>/<sub>.samples.<ext>` and `<dir>/<sub>.summary.json`.
pub fn write_outcome(
    dir: &Path,
    outcome: &Outcome,
    seed: u64,
    config: &Value,
    format: Format,
) -> std::io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let samples = dir.join(format!(
        "{}.samples.{}",
        outcome.subcommand,
        format.extension()
    ));
    let summary = dir.join(format!("{}.summary.json", outcome.subcommand));
    let body = match format {
        Format::Csv => samples_csv(&outcome.samples),
        Format::Json => samples_json(&outcome.samples),
    };
    fs::write(&samples, body)?;
    fs::write(&summary, summary_json(outcome, seed, config))?;
    Ok((samples, summary))
}

/// `t,value` rows on the path's grid.
pub fn path_csv(path: &SampledPath) -> String {
    let mut out = String::from("t,value\n");
    for (i, v) in path.values.iter().enumerate() {
        writeln!(out, "{:?},{v:?}", path.time(i)).unwrap();
    }
    out
}

/// `level,mass` rows, one per bin, keyed by the bin's lower edge.
pub fn local_time_csv(lt: &LocalTimeProfile) -> String {
    let mut out = String::from("level,mass\n");
    for (b, m) in lt.mass.iter().enumerate() {
        writeln!(out, "{:?},{m:?}", b as f64 * lt.dv).unwrap();
    }
    out
}

pub fn profile_json(p: &HeightProfile) -> String {
    serde_json::to_string(p).unwrap()
}

/// `profile,multiplicity` rows, the profile written as `z0;z1;...`.
pub fn enumeration_csv<'a, I>(rows: I) -> String
where
    I: IntoIterator<Item = (&'a Vec<u64>, &'a u64)>,
{
    let mut out = String::from("profile,multiplicity\n");
    for (z, m) in rows {
        let key: Vec<String> = z.iter().map(u64::to_string).collect();
        writeln!(out, "{},{m}", key.join(";")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsforest_core::path::Interp;
    use std::collections::BTreeMap;

    #[test]
    fn samples_round_trip_exactly() {
        let xs = vec![0.1, -1.0 / 3.0, 1e-300, 12345.678];
        assert_eq!(parse_samples_csv(&samples_csv(&xs)).unwrap(), xs);
        assert!(parse_samples_csv("a,b\n").is_err());
        assert!(parse_samples_csv("replicate,value\n1,0.5\n").is_err());
    }

    #[test]
    fn small_formats() {
        let p = SampledPath::new(0.5, vec![1.0, 2.0], Interp::Linear).unwrap();
        assert_eq!(path_csv(&p), "t,value\n0.0,1.0\n0.5,2.0\n");
        let lt = LocalTimeProfile {
            dv: 0.25,
            mass: vec![2.0, 0.5],
        };
        assert_eq!(local_time_csv(&lt), "level,mass\n0.0,2.0\n0.25,0.5\n");
        assert_eq!(profile_json(&HeightProfile::from(vec![2, 3, 1])), "[2,3,1]");
        let mut e = BTreeMap::new();
        e.insert(vec![1u64, 2], 3u64);
        assert_eq!(enumeration_csv(&e), "profile,multiplicity\n1;2,3\n");
    }
}
