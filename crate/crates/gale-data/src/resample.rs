use crate::frame::{is_missing, SeriesFrame};
use crate::schema::Aggregation;
use crate::{DataError, Result};
use chrono::{DateTime, Duration, TimeZone, Utc};
use std::collections::BTreeMap;

fn aggregate(tag: Aggregation, values: &[f64]) -> f64 {
    match tag {
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregation::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
        Aggregation::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        // Pooling sub-interval standard deviations: root mean square.
        Aggregation::StdPool => {
            (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
        }
    }
}

/// Coarsen the frame to `target` resolution, aggregating each column by its
/// schema tag. Bins aligned to epoch multiples of `target`; a bin missing any
/// reading (absent rows or NaN cells) comes out missing, and the output grid
/// is contiguous from the first to the last bin.
pub fn resample(frame: &SeriesFrame, target: Duration) -> Result<SeriesFrame> {
    let frame_seconds = frame.resolution().num_seconds();
    let target_seconds = target.num_seconds();
    if frame_seconds <= 0 || target_seconds % frame_seconds != 0 {
        return Err(DataError::NonIntegerRatio {
            frame_seconds,
            target_seconds,
        });
    }
    let ratio = (target_seconds / frame_seconds) as usize;
    if ratio == 1 {
        return Ok(frame.clone());
    }

    let bin_of = |ts: &DateTime<Utc>| ts.timestamp().div_euclid(target_seconds);
    let first = bin_of(&frame.timestamps()[0]);
    let last = bin_of(frame.timestamps().last().expect("nonempty frame"));
    let n_bins = (last - first + 1) as usize;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (row, ts) in frame.timestamps().iter().enumerate() {
        members[(bin_of(ts) - first) as usize].push(row);
    }

    let timestamps: Vec<DateTime<Utc>> = (0..n_bins)
        .map(|b| {
            Utc.timestamp_opt((first + b as i64) * target_seconds, 0)
                .single()
                .expect("bin start is a valid instant")
        })
        .collect();
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for spec in frame.schema() {
        let col = frame.column(&spec.name)?;
        let series: Vec<f64> = members
            .iter()
            .map(|rows| {
                if rows.len() < ratio {
                    return f64::NAN;
                }
                let values: Vec<f64> = rows.iter().map(|&r| col[r]).collect();
                if values.iter().any(|v| is_missing(*v)) {
                    f64::NAN
                } else {
                    aggregate(spec.aggregation, &values)
                }
            })
            .collect();
        columns.insert(spec.name.clone(), series);
    }
    SeriesFrame::new(timestamps, columns, target, frame.schema().to_vec())
}
