use crate::frame::{is_missing, SeriesFrame};
use crate::{DataError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-column (min, max) in original units, fit on the training split and
/// reused verbatim for validation and test data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: BTreeMap<String, (f64, f64)>,
}

impl NormalizationParams {
    pub fn get(&self, column: &str) -> Result<(f64, f64)> {
        self.columns
            .get(column)
            .copied()
            .ok_or_else(|| DataError::UnknownColumn(column.to_string()))
    }

    pub fn normalize_value(&self, column: &str, x: f64) -> Result<f64> {
        let (lo, hi) = self.get(column)?;
        Ok(if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
    }

    pub fn denormalize_value(&self, column: &str, x: f64) -> Result<f64> {
        let (lo, hi) = self.get(column)?;
        Ok(x * (hi - lo) + lo)
    }
}

/// Min-max scale every column. With `params` absent the (min, max) pairs are
/// fit on this frame's observed values; with `params` given (the train-split
/// fit) they are applied as-is, so out-of-range values can leave [0, 1].
/// Constant columns map to zero.
pub fn normalize_minmax(
    frame: &SeriesFrame,
    params: Option<&NormalizationParams>,
) -> Result<(SeriesFrame, NormalizationParams)> {
    let params = match params {
        Some(p) => p.clone(),
        None => {
            let mut columns = BTreeMap::new();
            for name in frame.column_names() {
                let col = frame.column(name)?;
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for &v in col.iter().filter(|v| !is_missing(**v)) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if !lo.is_finite() {
                    return Err(DataError::AllMissingColumn(name.to_string()));
                }
                columns.insert(name.to_string(), (lo, hi));
            }
            NormalizationParams { columns }
        }
    };

    let mut out = frame.clone();
    let names: Vec<String> = frame.column_names().map(str::to_string).collect();
    for name in &names {
        let scaled: Vec<f64> = frame
            .column(name)?
            .iter()
            .map(|&v| {
                if is_missing(v) {
                    v
                } else {
                    params.normalize_value(name, v).expect("column fitted")
                }
            })
            .collect();
        out.set_column(name, scaled)?;
    }
    Ok((out, params))
}

/// Map a normalized series back to original units; the exact inverse of
/// [`normalize_minmax`] up to floating-point rounding.
pub fn denormalize(
    values: &[f64],
    params: &NormalizationParams,
    column: &str,
) -> Result<Vec<f64>> {
    let (lo, hi) = params.get(column)?;
    Ok(values.iter().map(|&v| v * (hi - lo) + lo).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Aggregation, FeatureRole, FeatureSpec};
    use chrono::{DateTime, Duration, TimeZone, Utc};
    use std::collections::BTreeMap as Map;

    fn frame_of(values: Vec<f64>) -> SeriesFrame {
        let timestamps: Vec<DateTime<Utc>> = (0..values.len())
            .map(|i| Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap() + Duration::hours(i as i64))
            .collect();
        let mut columns = Map::new();
        columns.insert("p".to_string(), values);
        SeriesFrame::new(
            timestamps,
            columns,
            Duration::hours(1),
            vec![FeatureSpec::new("p", FeatureRole::Target, Aggregation::Mean)],
        )
        .unwrap()
    }

    #[test]
    fn endpoints_map_to_unit_interval() {
        let (scaled, params) = normalize_minmax(&frame_of(vec![0.0, 5.0, 10.0]), None).unwrap();
        assert_eq!(scaled.column("p").unwrap(), &[0.0, 0.5, 1.0]);
        assert_eq!(params.get("p").unwrap(), (0.0, 10.0));
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let (scaled, params) = normalize_minmax(&frame_of(vec![3.0, 3.0, 3.0]), None).unwrap();
        assert_eq!(scaled.column("p").unwrap(), &[0.0, 0.0, 0.0]);
        assert_eq!(params.get("p").unwrap(), (3.0, 3.0));
        // Degenerate inverse returns the constant.
        assert_eq!(denormalize(&[0.0], &params, "p").unwrap(), vec![3.0]);
    }

    #[test]
    fn train_fit_params_can_exceed_unit_range() {
        let (_, params) = normalize_minmax(&frame_of(vec![0.0, 10.0]), None).unwrap();
        let (scaled, _) = normalize_minmax(&frame_of(vec![12.0]), Some(&params)).unwrap();
        assert!((scaled.column("p").unwrap()[0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn denormalize_inverts_the_midpoint() {
        let mut columns = Map::new();
        columns.insert("p".to_string(), (0.0, 10.0));
        let params = NormalizationParams { columns };
        assert_eq!(denormalize(&[0.5], &params, "p").unwrap(), vec![5.0]);
        assert!(matches!(
            denormalize(&[0.5], &params, "q"),
            Err(DataError::UnknownColumn(_))
        ));
    }

    #[test]
    fn missing_values_pass_through() {
        let (scaled, _) = normalize_minmax(&frame_of(vec![0.0, f64::NAN, 10.0]), None).unwrap();
        assert!(is_missing(scaled.column("p").unwrap()[1]));
    }
}
