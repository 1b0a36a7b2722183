//! Calendar partitioning of an evaluation span, with metrics computed per
//! partition against that partition's own maximum.

use crate::metrics::{metric_report, MetricReport};
use crate::{EvalError, Result};
use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];
const SEASONS: [&str; 4] = ["spring", "summer", "autumn", "winter"];

/// Calendar resolution used to partition an evaluation span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Month,
    Season,
    Year,
}

impl Granularity {
    /// Label of the period `ts` falls into. Seasons follow the meteorological
    /// mapping: March through May is spring, and so on in three-month blocks.
    pub fn label(&self, ts: &DateTime<Utc>) -> String {
        match self {
            Granularity::Month => MONTHS[ts.month0() as usize].to_string(),
            Granularity::Season => season_of(ts.month()).to_string(),
            Granularity::Year => ts.year().to_string(),
        }
    }
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Granularity::Month => "month",
            Granularity::Season => "season",
            Granularity::Year => "year",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Granularity {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "month" => Ok(Granularity::Month),
            "season" => Ok(Granularity::Season),
            "year" => Ok(Granularity::Year),
            other => Err(EvalError::InvalidConfig(format!(
                "unknown granularity `{other}`; expected month, season, or year"
            ))),
        }
    }
}

fn season_of(month: u32) -> &'static str {
    match month {
        3..=5 => "spring",
        6..=8 => "summer",
        9..=11 => "autumn",
        _ => "winter",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub label: String,
    pub report: MetricReport,
}

/// Per-period metrics in calendar order. Periods whose metrics cannot be
/// computed (an all-zero actual span) are listed under `warnings` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedReport {
    pub granularity: Granularity,
    pub entries: Vec<GroupEntry>,
    pub warnings: Vec<String>,
}

/// Partition points by calendar label and compute both metrics per label,
/// normalizing by each partition's own maximum actual value.
pub fn group_by_period(
    timestamps: &[DateTime<Utc>],
    actual: &[f64],
    predicted: &[f64],
    granularity: Granularity,
) -> Result<GroupedReport> {
    if timestamps.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            left: timestamps.len(),
            right: actual.len(),
        });
    }
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if timestamps.is_empty() {
        return Err(EvalError::EmptySeries);
    }

    let mut partitions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ts) in timestamps.iter().enumerate() {
        partitions.entry(granularity.label(ts)).or_default().push(i);
    }

    let ordered: Vec<String> = match granularity {
        Granularity::Month => MONTHS
            .iter()
            .map(|m| m.to_string())
            .filter(|m| partitions.contains_key(m))
            .collect(),
        Granularity::Season => SEASONS
            .iter()
            .map(|s| s.to_string())
            .filter(|s| partitions.contains_key(s))
            .collect(),
        // Year labels sort numerically once padded; BTreeMap order suffices
        // for four-digit years.
        Granularity::Year => partitions.keys().cloned().collect(),
    };

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for label in ordered {
        let rows = &partitions[&label];
        let y: Vec<f64> = rows.iter().map(|&i| actual[i]).collect();
        let yhat: Vec<f64> = rows.iter().map(|&i| predicted[i]).collect();
        match metric_report(&y, &yhat, None) {
            Ok(report) => entries.push(GroupEntry { label, report }),
            Err(EvalError::ZeroMaxActual) => warnings.push(format!(
                "{label}: maximum actual value is not positive; group skipped"
            )),
            Err(e) => return Err(e),
        }
    }
    Ok(GroupedReport {
        granularity,
        entries,
        warnings,
    })
}
