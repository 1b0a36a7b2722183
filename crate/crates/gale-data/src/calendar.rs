use crate::frame::SeriesFrame;
use crate::schema::{Aggregation, FeatureRole, FeatureSpec};
use crate::Result;
use chrono::{DateTime, Datelike, Timelike, Utc};

pub const SEASON_LABELS: [&str; 4] = ["spring", "summer", "autumn", "winter"];
pub const MONTH_LABELS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// Meteorological season index: Mar-May spring (0), Jun-Aug summer (1),
/// Sep-Nov autumn (2), Dec-Feb winter (3).
pub fn season_of_month(month: u32) -> u32 {
    match month {
        3..=5 => 0,
        6..=8 => 1,
        9..=11 => 2,
        _ => 3,
    }
}

/// Names and index cardinalities of the calendar columns this module adds.
/// `month` keeps its natural 1-12 coding, so its table has 13 rows.
pub const CALENDAR_COLUMNS: [(&str, usize); 4] = [
    ("hour", 24),
    ("day_of_week", 7),
    ("month", 13),
    ("season", 4),
];

pub fn calendar_cardinality(name: &str) -> Option<usize> {
    CALENDAR_COLUMNS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
}

fn hour_of(ts: &DateTime<Utc>) -> f64 {
    ts.hour() as f64
}

fn day_of_week_of(ts: &DateTime<Utc>) -> f64 {
    ts.weekday().num_days_from_monday() as f64
}

fn month_of(ts: &DateTime<Utc>) -> f64 {
    ts.month() as f64
}

fn season_of(ts: &DateTime<Utc>) -> f64 {
    season_of_month(ts.month()) as f64
}

/// Append integer-coded calendar columns (hour, day_of_week, month, season)
/// with the known-future role.
pub fn add_calendar_features(frame: &SeriesFrame) -> Result<SeriesFrame> {
    let mut out = frame.clone();
    let derivations: [(&str, fn(&DateTime<Utc>) -> f64); 4] = [
        ("hour", hour_of),
        ("day_of_week", day_of_week_of),
        ("month", month_of),
        ("season", season_of),
    ];
    for (name, derive) in derivations {
        let values: Vec<f64> = frame.timestamps().iter().map(derive).collect();
        out.add_column(
            FeatureSpec::new(name, FeatureRole::KnownFuture, Aggregation::Mean),
            values,
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};
    use std::collections::BTreeMap;

    fn frame_at(instants: Vec<DateTime<Utc>>) -> SeriesFrame {
        let n = instants.len();
        let mut columns = BTreeMap::new();
        columns.insert("p".to_string(), vec![0.0; n]);
        SeriesFrame::new(
            instants,
            columns,
            Duration::hours(1),
            vec![FeatureSpec::new("p", FeatureRole::Target, Aggregation::Mean)],
        )
        .unwrap()
    }

    #[test]
    fn april_noon_is_spring() {
        let frame = frame_at(vec![Utc.with_ymd_and_hms(2017, 4, 15, 12, 0, 0).unwrap()]);
        let out = add_calendar_features(&frame).unwrap();
        assert_eq!(out.column("month").unwrap()[0], 4.0);
        assert_eq!(out.column("hour").unwrap()[0], 12.0);
        assert_eq!(out.column("season").unwrap()[0], 0.0);
        assert_eq!(SEASON_LABELS[0], "spring");
    }

    #[test]
    fn december_is_winter() {
        let frame = frame_at(vec![Utc.with_ymd_and_hms(2017, 12, 1, 0, 0, 0).unwrap()]);
        let out = add_calendar_features(&frame).unwrap();
        assert_eq!(out.column("season").unwrap()[0], 3.0);
        assert_eq!(SEASON_LABELS[3], "winter");
    }

    #[test]
    fn weekday_repeats_every_seven_days() {
        let monday = Utc.with_ymd_and_hms(2017, 1, 2, 8, 0, 0).unwrap();
        let frame = frame_at(vec![monday, monday + Duration::days(7)]);
        let out = add_calendar_features(&frame).unwrap();
        let dow = out.column("day_of_week").unwrap();
        assert_eq!(dow[0], dow[1]);
        assert_eq!(dow[0], 0.0);
    }

    #[test]
    fn season_mapping_covers_all_months() {
        let expect = [3, 3, 0, 0, 0, 1, 1, 1, 2, 2, 2, 3];
        for (m, &s) in (1..=12).zip(&expect) {
            assert_eq!(season_of_month(m), s, "month {m}");
        }
    }

    #[test]
    fn added_columns_have_known_future_role() {
        let frame = frame_at(vec![Utc.with_ymd_and_hms(2017, 7, 1, 3, 0, 0).unwrap()]);
        let out = add_calendar_features(&frame).unwrap();
        for (name, _) in CALENDAR_COLUMNS {
            assert_eq!(out.feature(name).unwrap().role, FeatureRole::KnownFuture);
        }
        assert_eq!(calendar_cardinality("hour"), Some(24));
        assert_eq!(calendar_cardinality("power"), None);
    }
}
