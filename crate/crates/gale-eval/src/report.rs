//! Export of evaluation results as JSON metrics plus CSV surfaces for
//! scatter, error box, and grouped-bar plots.

use crate::grouping::{group_by_period, Granularity, GroupedReport};
use crate::metrics::{metric_report, MetricReport};
use crate::{EvalError, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One model's evaluation: the aligned series plus computed summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub timestamps: Vec<DateTime<Utc>>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub overall: MetricReport,
    pub grouped: Vec<GroupedReport>,
}

impl ModelReport {
    /// Evaluate one model's forecasts overall and per calendar period.
    pub fn new(
        model: impl Into<String>,
        timestamps: Vec<DateTime<Utc>>,
        actual: Vec<f64>,
        predicted: Vec<f64>,
        granularities: &[Granularity],
    ) -> Result<Self> {
        if timestamps.len() != actual.len() {
            return Err(EvalError::LengthMismatch {
                left: timestamps.len(),
                right: actual.len(),
            });
        }
        let overall = metric_report(&actual, &predicted, None)?;
        let grouped = granularities
            .iter()
            .map(|&g| group_by_period(&timestamps, &actual, &predicted, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: model.into(),
            timestamps,
            actual,
            predicted,
            overall,
            grouped,
        })
    }
}

/// The summary half of a report, as stored in `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub overall: MetricReport,
    pub grouped: Vec<GroupedReport>,
}

impl From<&ModelReport> for ModelMetrics {
    fn from(report: &ModelReport) -> Self {
        Self {
            model: report.model.clone(),
            overall: report.overall,
            grouped: report.grouped.clone(),
        }
    }
}

/// Write `metrics.json`, `scatter.csv`, `box.csv`, and `grouped.csv` under
/// `dir`, returning the paths written. An empty report list still produces
/// all four files with headers only.
pub fn export_report(reports: &[ModelReport], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let rfc3339 = |ts: &DateTime<Utc>| ts.to_rfc3339_opts(SecondsFormat::Secs, true);

    let metrics_path = dir.join("metrics.json");
    let metrics: Vec<ModelMetrics> = reports.iter().map(ModelMetrics::from).collect();
    std::fs::write(&metrics_path, serde_json::to_string_pretty(&metrics)?)?;

    let scatter_path = dir.join("scatter.csv");
    let mut scatter = csv::Writer::from_path(&scatter_path)?;
    scatter.write_record(["timestamp", "actual", "predicted", "model"])?;
    for report in reports {
        for ((ts, y), yhat) in report
            .timestamps
            .iter()
            .zip(&report.actual)
            .zip(&report.predicted)
        {
            scatter.write_record([
                rfc3339(ts),
                y.to_string(),
                yhat.to_string(),
                report.model.clone(),
            ])?;
        }
    }
    scatter.flush()?;

    let box_path = dir.join("box.csv");
    let mut boxes = csv::Writer::from_path(&box_path)?;
    boxes.write_record(["model", "abs_error"])?;
    for report in reports {
        for (y, yhat) in report.actual.iter().zip(&report.predicted) {
            boxes.write_record([report.model.clone(), (y - yhat).abs().to_string()])?;
        }
    }
    boxes.flush()?;

    let grouped_path = dir.join("grouped.csv");
    let mut grouped = csv::Writer::from_path(&grouped_path)?;
    grouped.write_record(["model", "granularity", "label", "nmae", "nrmse"])?;
    for report in reports {
        for group in &report.grouped {
            for entry in &group.entries {
                grouped.write_record([
                    report.model.clone(),
                    group.granularity.to_string(),
                    entry.label.clone(),
                    entry.report.nmae.to_string(),
                    entry.report.nrmse.to_string(),
                ])?;
            }
        }
    }
    grouped.flush()?;

    Ok(vec![metrics_path, scatter_path, box_path, grouped_path])
}

/// Parse a `metrics.json` written by [`export_report`].
pub fn read_metrics(path: &Path) -> Result<Vec<ModelMetrics>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
