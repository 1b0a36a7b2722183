use crate::schema::{validate_schema, FeatureRole, FeatureSpec};
use crate::{DataError, Result};
use chrono::{DateTime, Duration, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Missing values are carried as NaN inside columns.
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

/// An aligned, timestamped table of real-valued series plus the schema
/// describing each column's role.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    timestamps: Vec<DateTime<Utc>>,
    columns: BTreeMap<String, Vec<f64>>,
    resolution: Duration,
    schema: Vec<FeatureSpec>,
}

#[derive(Serialize, Deserialize)]
struct FrameMeta {
    resolution_seconds: i64,
}

impl SeriesFrame {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        columns: BTreeMap<String, Vec<f64>>,
        resolution: Duration,
        schema: Vec<FeatureSpec>,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        for f in &schema {
            let col = columns
                .get(&f.name)
                .ok_or_else(|| DataError::MissingColumn(f.name.clone()))?;
            if col.len() != timestamps.len() {
                return Err(DataError::LengthMismatch {
                    name: f.name.clone(),
                    len: col.len(),
                    expected: timestamps.len(),
                });
            }
        }
        for name in columns.keys() {
            if !schema.iter().any(|f| &f.name == name) {
                return Err(DataError::InvalidSchema(format!(
                    "column `{name}` has no schema entry"
                )));
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(DataError::NonMonotoneTimestamps(i + 1));
        }
        Ok(Self {
            timestamps,
            columns,
            resolution,
            schema,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.schema.iter().find(|f| f.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|f| f.name.as_str())
    }

    /// The unique column with the target role.
    pub fn target_name(&self) -> &str {
        self.schema
            .iter()
            .find(|f| f.role == FeatureRole::Target)
            .map(|f| f.name.as_str())
            .expect("schema invariant: one target")
    }

    pub fn names_with_role(&self, role: FeatureRole) -> Vec<&str> {
        self.schema
            .iter()
            .filter(|f| f.role == role)
            .map(|f| f.name.as_str())
            .collect()
    }

    /// Replace one column's values, keeping schema and timestamps.
    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.timestamps.len() {
            return Err(DataError::LengthMismatch {
                name: name.to_string(),
                len: values.len(),
                expected: self.timestamps.len(),
            });
        }
        match self.columns.get_mut(name) {
            Some(col) => {
                *col = values;
                Ok(())
            }
            None => Err(DataError::MissingColumn(name.to_string())),
        }
    }

    /// Append a new column with its schema entry.
    pub fn add_column(&mut self, spec: FeatureSpec, values: Vec<f64>) -> Result<()> {
        if self.columns.contains_key(&spec.name) {
            return Err(DataError::InvalidSchema(format!(
                "column `{}` already exists",
                spec.name
            )));
        }
        if values.len() != self.timestamps.len() {
            return Err(DataError::LengthMismatch {
                name: spec.name.clone(),
                len: values.len(),
                expected: self.timestamps.len(),
            });
        }
        self.columns.insert(spec.name.clone(), values);
        self.schema.push(spec);
        Ok(())
    }

    /// A new frame holding the given row indices (must be strictly increasing).
    pub fn select_rows(&self, rows: &[usize]) -> Result<SeriesFrame> {
        let timestamps = rows.iter().map(|&i| self.timestamps[i]).collect();
        let columns = self
            .columns
            .iter()
            .map(|(name, col)| (name.clone(), rows.iter().map(|&i| col[i]).collect()))
            .collect();
        SeriesFrame::new(timestamps, columns, self.resolution, self.schema.clone())
    }

    /// Write `data.csv`, `schema.json`, and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let schema_json = serde_json::to_string_pretty(&self.schema)
            .map_err(|e| DataError::Format(e.to_string()))?;
        std::fs::write(dir.join("schema.json"), schema_json)?;
        let meta = FrameMeta {
            resolution_seconds: self.resolution.num_seconds(),
        };
        let meta_json =
            serde_json::to_string_pretty(&meta).map_err(|e| DataError::Format(e.to_string()))?;
        std::fs::write(dir.join("meta.json"), meta_json)?;

        let mut w = csv::Writer::from_path(dir.join("data.csv"))?;
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.schema.iter().map(|f| f.name.clone()));
        w.write_record(&header)?;
        for (i, ts) in self.timestamps.iter().enumerate() {
            let mut record = vec![ts.to_rfc3339_opts(SecondsFormat::Secs, true)];
            for f in &self.schema {
                let v = self.columns[&f.name][i];
                record.push(if is_missing(v) {
                    String::new()
                } else {
                    format!("{v}")
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a frame previously written by [`SeriesFrame::save`].
    pub fn load(dir: &Path) -> Result<SeriesFrame> {
        let schema_json = std::fs::read_to_string(dir.join("schema.json"))?;
        let schema: Vec<FeatureSpec> =
            serde_json::from_str(&schema_json).map_err(|e| DataError::Format(e.to_string()))?;
        let meta_json = std::fs::read_to_string(dir.join("meta.json"))?;
        let meta: FrameMeta =
            serde_json::from_str(&meta_json).map_err(|e| DataError::Format(e.to_string()))?;
        let frame = crate::ingest::ingest_csv(&dir.join("data.csv"), &schema, "timestamp")?;
        Ok(SeriesFrame {
            resolution: Duration::seconds(meta.resolution_seconds),
            ..frame
        })
    }
}

/// Construction used by ingestion, which infers the resolution itself.
pub(crate) fn frame_from_parts(
    timestamps: Vec<DateTime<Utc>>,
    columns: BTreeMap<String, Vec<f64>>,
    resolution: Duration,
    schema: Vec<FeatureSpec>,
) -> Result<SeriesFrame> {
    SeriesFrame::new(timestamps, columns, resolution, schema)
}
