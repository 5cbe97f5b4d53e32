//! Replications, parameter sweeps and table output.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, RunError};
use crate::kernel::mix_seed;
use crate::metrics::RunMetrics;
use crate::scenario::Scenario;
use crate::sim::run_once;

/// Seed for replication `r` of a run with master seed `master`.
pub fn replication_seed(master: u64, r: u32) -> u64 {
    mix_seed(master, r as u64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single replication.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Stat::default();
        }
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

/// Mean and spread of every [`RunMetrics`] field over replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replications: u32,
    pub stats: Vec<Stat>,
    pub runs: Vec<RunMetrics>,
}

impl Aggregate {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Aggregate {
        let stats = (0..RunMetrics::FIELDS.len())
            .map(|i| Stat::of(&runs.iter().map(|m| m.values()[i]).collect::<Vec<_>>()))
            .collect();
        Aggregate {
            replications: runs.len() as u32,
            stats,
            runs,
        }
    }

    pub fn get(&self, field: &str) -> Option<Stat> {
        RunMetrics::FIELDS
            .iter()
            .position(|f| *f == field)
            .map(|i| self.stats[i])
    }

    pub fn mean(&self, field: &str) -> f64 {
        self.get(field).unwrap_or_else(|| panic!("unknown metric {field}")).mean
    }
}

/// Runs every replication (in parallel) and aggregates in replication order.
pub fn run_scenario(s: &Scenario) -> Result<Aggregate, RunError> {
    s.validate()?;
    let runs = (0..s.replications)
        .into_par_iter()
        .map(|r| run_once(s, replication_seed(s.seed, r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Aggregate::from_runs(runs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

/// Parses `path=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<String>), ConfigError> {
    let (axis, values) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(spec, "expected `path=v1,v2,...`"))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(ConfigError::new(axis.trim(), "sweep needs at least one value"));
    }
    Ok((axis.trim().to_string(), values))
}

/// One aggregated row per value of `axis`. Every point uses the base
/// scenario's master seed, so rows are paired across seeds.
pub fn sweep(base: &Scenario, axis: &str, values: &[String]) -> Result<SweepTable, RunError> {
    let scenarios = values
        .iter()
        .map(|v| {
            let mut s = base.clone();
            s.set(axis, v)?;
            s.validate()?;
            Ok(s)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let rows = scenarios
        .par_iter()
        .zip(values.par_iter())
        .map(|(s, v)| {
            Ok(SweepRow {
                value: v.clone(),
                aggregate: run_scenario(s)?,
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(SweepTable {
        axis: axis.to_string(),
        rows,
    })
}

/// Table for a plain run: axis `run`, value `base`.
pub fn single(s: &Scenario) -> Result<SweepTable, RunError> {
    Ok(SweepTable {
        axis: "run".into(),
        rows: vec![SweepRow {
            value: "base".into(),
            aggregate: run_scenario(s)?,
        }],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (csv or json)")),
        }
    }
}

/// Column names shared by both formats.
pub fn columns() -> Vec<String> {
    let mut cols = vec!["axis".to_string(), "value".into(), "replications".into()];
    for f in RunMetrics::FIELDS {
        cols.push(format!("{f}_mean"));
        cols.push(format!("{f}_std"));
    }
    cols
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit(table: &SweepTable, format: Format) -> Vec<u8> {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&columns().join(","));
            out.push('\n');
            for row in &table.rows {
                let mut cells = vec![
                    csv_field(&table.axis),
                    csv_field(&row.value),
                    row.aggregate.replications.to_string(),
                ];
                for s in &row.aggregate.stats {
                    cells.push(format!("{:.6}", s.mean));
                    cells.push(format!("{:.6}", s.std));
                }
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Format::Json => {
            // Written by hand so every number keeps exactly six decimals.
            let q = |s: &str| serde_json::to_string(s).expect("string serializes");
            out.push('[');
            for (i, row) in table.rows.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(
                    out,
                    "\n  {{\"axis\": {}, \"value\": {}, \"replications\": {}",
                    q(&table.axis),
                    q(&row.value),
                    row.aggregate.replications
                )
                .unwrap();
                for (f, s) in RunMetrics::FIELDS.iter().zip(&row.aggregate.stats) {
                    write!(out, ", \"{f}_mean\": {:.6}, \"{f}_std\": {:.6}", s.mean, s.std).unwrap();
                }
                out.push('}');
            }
            out.push_str("\n]\n");
        }
    }
    out.into_bytes()
}
