use crate::frame::{is_missing, SeriesFrame};
use crate::schema::FeatureRole;
use crate::{DataError, Result};
use chrono::Duration;

/// Replace values outside a column's declared physical bounds with the
/// violated bound. Columns without bounds pass through untouched.
pub fn clip_outliers(frame: &SeriesFrame) -> SeriesFrame {
    let mut out = frame.clone();
    for spec in frame.schema().to_vec() {
        let Some((lo, hi)) = spec.physical_bounds else {
            continue;
        };
        let clipped: Vec<f64> = frame
            .column(&spec.name)
            .expect("schema column exists")
            .iter()
            .map(|&v| if is_missing(v) { v } else { v.clamp(lo, hi) })
            .collect();
        out.set_column(&spec.name, clipped).expect("same length");
    }
    out
}

/// Fill short gaps from the same clock hour of a nearby day with the most
/// similar weather; runs of missing values lasting `max_gap` or longer are
/// left missing so downstream window extraction skips them.
///
/// Similarity is the Euclidean distance over min-max-scaled observed
/// covariates present at both instants; ties prefer the closer day, then the
/// past day.
pub fn impute_missing(frame: &SeriesFrame, max_gap: Duration) -> Result<SeriesFrame> {
    let weather: Vec<&str> = frame.names_with_role(FeatureRole::ObservedPast);
    let mut scale: Vec<(String, f64, f64)> = Vec::new();
    for name in &weather {
        let col = frame.column(name)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col.iter().filter(|v| !is_missing(**v)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo.is_finite() {
            scale.push((name.to_string(), lo, hi));
        }
    }
    let scaled = |name: &str, v: f64| -> f64 {
        match scale.iter().find(|(n, _, _)| n == name) {
            Some((_, lo, hi)) if hi > lo => (v - lo) / (hi - lo),
            _ => 0.0,
        }
    };

    let timestamps = frame.timestamps();
    let mut out = frame.clone();
    let names: Vec<String> = frame.column_names().map(str::to_string).collect();
    for name in &names {
        let col = frame.column(name)?.to_vec();
        if col.iter().filter(|v| !is_missing(**v)).count() < 2 {
            return Err(DataError::AllMissingColumn(name.clone()));
        }
        let mut filled = col.clone();
        let mut i = 0;
        while i < col.len() {
            if !is_missing(col[i]) {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < col.len() && is_missing(col[i]) {
                i += 1;
            }
            let run_len = i - run_start;
            if frame.resolution() * run_len as i32 >= max_gap {
                continue;
            }
            for t in run_start..i {
                // Candidate donors: the same clock hour one to three days away.
                let mut best: Option<(f64, i64, f64)> = None;
                for day in [-1i64, 1, -2, 2, -3, 3] {
                    let want = timestamps[t] + Duration::days(day);
                    let Ok(row) = timestamps.binary_search(&want) else {
                        continue;
                    };
                    let donor = frame.column(name)?[row];
                    if is_missing(donor) {
                        continue;
                    }
                    let mut dist = 0.0;
                    let mut used = 0;
                    for w in &weather {
                        if *w == name.as_str() {
                            continue;
                        }
                        let here = frame.column(w)?[t];
                        let there = frame.column(w)?[row];
                        if is_missing(here) || is_missing(there) {
                            continue;
                        }
                        let d = scaled(w, here) - scaled(w, there);
                        dist += d * d;
                        used += 1;
                    }
                    // Without shared weather readings fall back to day order.
                    if used == 0 {
                        dist = f64::MAX;
                    }
                    let better = match &best {
                        None => true,
                        Some((bd, bday, _)) => {
                            (dist, day.abs(), day) < (*bd, bday.abs(), *bday)
                        }
                    };
                    if better {
                        best = Some((dist, day, donor));
                    }
                }
                if let Some((_, _, donor)) = best {
                    filled[t] = donor;
                }
            }
        }
        out.set_column(name, filled)?;
    }
    Ok(out)
}
