//! Property tests for pipeline invariants on arbitrary series.

use chrono::{DateTime, Duration, TimeZone, Utc};
use gale_data::{
    clip_outliers, denormalize, normalize_minmax, resample, Aggregation, FeatureRole, FeatureSpec,
    SeriesFrame,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn frame_of(values: Vec<f64>, bounds: Option<(f64, f64)>) -> SeriesFrame {
    let timestamps: Vec<DateTime<Utc>> = (0..values.len())
        .map(|i| Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap() + Duration::hours(i as i64))
        .collect();
    let mut columns = BTreeMap::new();
    columns.insert("p".to_string(), values);
    let mut spec = FeatureSpec::new("p", FeatureRole::Target, Aggregation::Mean);
    if let Some((lo, hi)) = bounds {
        spec = spec.with_bounds(lo, hi);
    }
    SeriesFrame::new(timestamps, columns, Duration::hours(1), vec![spec]).unwrap()
}

proptest! {
    #[test]
    fn normalize_then_denormalize_is_identity(
        values in prop::collection::vec(-1e6f64..1e6, 2..64),
    ) {
        let frame = frame_of(values.clone(), None);
        let (scaled, params) = normalize_minmax(&frame, None).unwrap();
        let back = denormalize(scaled.column("p").unwrap(), &params, "p").unwrap();
        let (lo, hi) = params.get("p").unwrap();
        // Round-trip error scales with the column range, not the cell value.
        let tol = 1e-12 * (hi - lo).max(1.0);
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn clipped_values_respect_bounds(
        values in prop::collection::vec(-100.0f64..100.0, 2..64),
        lo in -50.0f64..0.0,
        span in 1.0f64..80.0,
    ) {
        let hi = lo + span;
        let frame = frame_of(values, Some((lo, hi)));
        let clipped = clip_outliers(&frame);
        for &v in clipped.column("p").unwrap() {
            prop_assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn resample_idempotent_on_hourly_target(
        values in prop::collection::vec(-10.0f64..10.0, 12..72),
    ) {
        let frame = frame_of(values, None);
        let once = resample(&frame, Duration::hours(3)).unwrap();
        let twice = resample(&once, Duration::hours(3)).unwrap();
        prop_assert_eq!(once.timestamps(), twice.timestamps());
        // Bitwise comparison keeps missing (NaN) bins equal to themselves.
        let a = once.column("p").unwrap();
        let b = twice.column("p").unwrap();
        for (x, y) in a.iter().zip(b) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
