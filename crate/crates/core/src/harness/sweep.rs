//! One-axis sweeps over a base config, with paired seeds across points.
//!
//! Each point is a separate experiment at a configured boundary value, so a
//! sweep over `w_low` only samples the "every `w ≤ w_low`" quantifier.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use super::config::ExperimentConfig;
use super::report::{csv_err, csv_fields, CSV_COLUMNS};
use super::run::{run_experiment, SuccessReport, Workers};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Epsilon,
    M,
    K,
    N,
    D,
    WLow,
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "epsilon" | "eps" => Axis::Epsilon,
            "m" => Axis::M,
            "k" => Axis::K,
            "n" => Axis::N,
            "d" => Axis::D,
            "w_low" => Axis::WLow,
            _ => {
                return Err(Error::config(format!(
                    "unknown sweep axis {s:?}; expected epsilon, m, k, n, d or w_low"
                )))
            }
        })
    }
}

/// Direction of `p_hat` relative to the previous point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    First,
    Up,
    Flat,
    Down,
}

impl Trend {
    fn as_str(self) -> &'static str {
        match self {
            Trend::First => "first",
            Trend::Up => "up",
            Trend::Flat => "flat",
            Trend::Down => "down",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: String,
    pub trend: Trend,
    pub report: SuccessReport,
}

/// Sets every `key` field in the tree; returns how many were set.
fn set_all(v: &mut Value, key: &str, to: &Value) -> usize {
    match v {
        Value::Object(map) => {
            let mut hits = 0;
            for (k, child) in map.iter_mut() {
                if k == key {
                    *child = to.clone();
                    hits += 1;
                } else {
                    hits += set_all(child, key, to);
                }
            }
            hits
        }
        Value::Array(items) => items.iter_mut().map(|c| set_all(c, key, to)).sum(),
        _ => 0,
    }
}

fn integer(s: &str) -> Result<Value> {
    s.trim()
        .parse::<u64>()
        .map(Value::from)
        .map_err(|_| Error::config(format!("sweep value {s:?} is not a non-negative integer")))
}

/// The base config with `axis` set to `value`.
pub fn apply_axis(base: &ExperimentConfig, axis: Axis, value: &str) -> Result<ExperimentConfig> {
    let mut v = serde_json::to_value(base)?;
    let hits = match axis {
        Axis::Epsilon => {
            let to = if value.trim().eq_ignore_ascii_case("inf") {
                Value::from("inf")
            } else {
                Value::from(super::parse_weight(value)?)
            };
            set_all(&mut v["mechanism"], "epsilon_per_query", &to)
        }
        Axis::M => {
            let to = integer(value)?;
            set_all(&mut v["mechanism"], "m", &to) + set_all(&mut v["adversary"], "m", &to)
        }
        Axis::K => {
            let k = integer(value)?;
            let kv = k.as_u64().unwrap();
            let hits = set_all(&mut v["mechanism"], "k", &k);
            raise_k_max(&mut v["mechanism"], kv);
            hits
        }
        Axis::N => set_all(&mut v, "n", &integer(value)?),
        Axis::D => {
            let d = integer(value)?;
            if v["d"].is_u64() {
                v["d"] = d.clone();
            }
            set_all(&mut v["distribution"], "d", &d)
        }
        Axis::WLow => {
            v["w_low"] = Value::from(super::parse_weight(value)?);
            1
        }
    };
    if hits == 0 {
        return Err(Error::config(format!("sweep axis {axis:?} matches no field of the config")));
    }
    ExperimentConfig::from_value(v)
}

/// Keeps `k_max ≥ k` after a `k` change.
fn raise_k_max(v: &mut Value, k: u64) {
    match v {
        Value::Object(map) => {
            if let Some(km) = map.get_mut("k_max") {
                if km.as_u64().is_some_and(|cur| cur < k) {
                    *km = Value::from(k);
                }
            }
            map.values_mut().for_each(|c| raise_k_max(c, k));
        }
        Value::Array(items) => items.iter_mut().for_each(|c| raise_k_max(c, k)),
        _ => {}
    }
}

/// Runs each point with the base seed and annotates the `p_hat` trend.
pub fn sweep(base: &ExperimentConfig, axis: Axis, values: &[String], workers: Workers) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(values.len());
    for value in values {
        let cfg = apply_axis(base, axis, value)?;
        let report = run_experiment(&cfg.resolve()?, workers)?;
        let trend = match rows.last() {
            None => Trend::First,
            Some(prev) if report.p_hat > prev.report.p_hat => Trend::Up,
            Some(prev) if report.p_hat < prev.report.p_hat => Trend::Down,
            Some(_) => Trend::Flat,
        };
        rows.push(SweepRow {
            axis,
            value: value.clone(),
            trend,
            report,
        });
    }
    Ok(rows)
}

pub const SWEEP_COLUMNS: [&str; 4] = ["axis", "value", "trend", "config"];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = CSV_COLUMNS.iter().chain(SWEEP_COLUMNS.iter()).copied().collect();
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut fields = csv_fields(&r.report);
        let axis = serde_json::to_value(r.axis)?;
        fields.push(axis.as_str().unwrap_or_default().to_string());
        fields.push(r.value.clone());
        fields.push(r.trend.as_str().into());
        fields.push(r.report.config.to_json());
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
