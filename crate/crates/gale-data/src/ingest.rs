use crate::frame::{frame_from_parts, SeriesFrame};
use crate::schema::FeatureSpec;
use crate::{DataError, Result};
use chrono::{DateTime, Duration, NaiveDateTime, TimeZone, Utc};
use std::collections::BTreeMap;
use std::path::Path;

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Utc.from_utc_datetime(&naive));
        }
    }
    None
}

/// The most frequent gap between consecutive timestamps; hourly when there
/// are fewer than two rows.
fn infer_resolution(timestamps: &[DateTime<Utc>]) -> Duration {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in timestamps.windows(2) {
        *counts.entry((w[1] - w[0]).num_seconds()).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(_, c)| c)
        .map(|(s, _)| Duration::seconds(s))
        .unwrap_or_else(|| Duration::hours(1))
}

/// Read a CSV into a frame: rows are sorted by timestamp, duplicate
/// timestamps collapse to the last record, and unparsable numeric cells
/// (including explicit `NaN` and empty cells) become missing markers.
pub fn ingest_csv(
    path: &Path,
    schema: &[FeatureSpec],
    timestamp_column: &str,
) -> Result<SeriesFrame> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let ts_idx = find(timestamp_column)?;
    let col_idx: Vec<usize> = schema
        .iter()
        .map(|f| find(&f.name))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(DateTime<Utc>, Vec<f64>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let raw_ts = record.get(ts_idx).unwrap_or("").trim();
        let ts = parse_timestamp(raw_ts).ok_or_else(|| DataError::UnparsableTimestamp {
            row: i + 1,
            value: raw_ts.to_string(),
        })?;
        let values = col_idx
            .iter()
            .map(|&c| {
                let cell = record.get(c).unwrap_or("").trim();
                cell.parse::<f64>().unwrap_or(f64::NAN)
            })
            .collect();
        rows.push((ts, values));
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile(path.display().to_string()));
    }
    rows.sort_by_key(|(ts, _)| *ts);
    // Last record wins on duplicate timestamps (SCADA re-transmissions).
    let mut deduped: Vec<(DateTime<Utc>, Vec<f64>)> = Vec::with_capacity(rows.len());
    for row in rows {
        match deduped.last_mut() {
            Some(last) if last.0 == row.0 => *last = row,
            _ => deduped.push(row),
        }
    }

    let timestamps: Vec<DateTime<Utc>> = deduped.iter().map(|(ts, _)| *ts).collect();
    let resolution = infer_resolution(&timestamps);
    let mut columns: BTreeMap<String, Vec<f64>> = schema
        .iter()
        .map(|f| (f.name.clone(), Vec::with_capacity(deduped.len())))
        .collect();
    for (_, values) in &deduped {
        for (f, &v) in schema.iter().zip(values) {
            columns.get_mut(&f.name).unwrap().push(v);
        }
    }
    frame_from_parts(timestamps, columns, resolution, schema.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::is_missing;
    use crate::schema::{Aggregation, FeatureRole};
    use std::io::Write;

    fn demo_schema() -> Vec<FeatureSpec> {
        vec![
            FeatureSpec::new("P_avg", FeatureRole::Target, Aggregation::Mean),
            FeatureSpec::new("Ws_avg", FeatureRole::ObservedPast, Aggregation::Mean),
        ]
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_a_small_file() {
        let f = write_csv(
            "Date_time,P_avg,Ws_avg\n\
             2017-01-01T00:00:00Z,100.0,5.5\n\
             2017-01-01T01:00:00Z,120.0,6.0\n\
             2017-01-01T02:00:00Z,90.0,5.0\n",
        );
        let frame = ingest_csv(f.path(), &demo_schema(), "Date_time").unwrap();
        assert_eq!(frame.len(), 3);
        assert_eq!(frame.column("P_avg").unwrap(), &[100.0, 120.0, 90.0]);
        assert_eq!(frame.resolution(), Duration::hours(1));
    }

    #[test]
    fn nan_and_empty_cells_become_missing() {
        let f = write_csv(
            "Date_time,P_avg,Ws_avg\n\
             2017-01-01T00:00:00Z,NaN,5.5\n\
             2017-01-01T01:00:00Z,,6.0\n",
        );
        let frame = ingest_csv(f.path(), &demo_schema(), "Date_time").unwrap();
        let p = frame.column("P_avg").unwrap();
        assert!(is_missing(p[0]) && is_missing(p[1]));
        assert_eq!(frame.column("Ws_avg").unwrap(), &[5.5, 6.0]);
    }

    #[test]
    fn rows_sorted_and_duplicates_collapse_to_last() {
        let f = write_csv(
            "Date_time,P_avg,Ws_avg\n\
             2017-01-01T02:00:00Z,90.0,5.0\n\
             2017-01-01T00:00:00Z,100.0,5.5\n\
             2017-01-01T00:00:00Z,111.0,5.6\n\
             2017-01-01T01:00:00Z,120.0,6.0\n",
        );
        let frame = ingest_csv(f.path(), &demo_schema(), "Date_time").unwrap();
        assert_eq!(frame.len(), 3);
        // Reference order: sort the distinct instants ascending.
        let sorted: Vec<_> = {
            let mut ts = frame.timestamps().to_vec();
            ts.sort();
            ts
        };
        assert_eq!(frame.timestamps(), &sorted[..]);
        assert_eq!(frame.column("P_avg").unwrap()[0], 111.0);
    }

    #[test]
    fn naive_timestamps_read_as_utc() {
        let f = write_csv(
            "Date_time,P_avg,Ws_avg\n\
             2017-01-01 00:00:00,1.0,2.0\n\
             2017-01-01 01:00:00,3.0,4.0\n",
        );
        let frame = ingest_csv(f.path(), &demo_schema(), "Date_time").unwrap();
        assert_eq!(frame.timestamps()[0], Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap());
    }

    #[test]
    fn error_paths_name_the_problem() {
        let f = write_csv("Date_time,P_avg\n2017-01-01T00:00:00Z,1.0\n");
        match ingest_csv(f.path(), &demo_schema(), "Date_time") {
            Err(DataError::MissingColumn(name)) => assert_eq!(name, "Ws_avg"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }

        let f = write_csv("Date_time,P_avg,Ws_avg\nnot-a-time,1.0,2.0\n");
        match ingest_csv(f.path(), &demo_schema(), "Date_time") {
            Err(DataError::UnparsableTimestamp { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected UnparsableTimestamp, got {other:?}"),
        }

        let f = write_csv("Date_time,P_avg,Ws_avg\n");
        assert!(matches!(
            ingest_csv(f.path(), &demo_schema(), "Date_time"),
            Err(DataError::EmptyFile(_))
        ));
    }
}
