use crate::layout::FeatureLayout;
use crate::{Result, TftError};
use chrono::{DateTime, Utc};
use gale_autodiff::Tensor;
use gale_data::{is_missing, SeriesFrame};

/// One mini-batch of forecast windows, dense and fully observed.
///
/// An origin is the row index of the first forecast step: the window spans
/// `encoder_length` rows before it and `horizon` rows from it onward.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// `[B, n_static]`
    pub static_inputs: Tensor,
    /// `[B, encoder_length, n_observed]`
    pub observed_past: Tensor,
    /// `[B, encoder_length + horizon, n_known]`
    pub known_inputs: Tensor,
    /// `[B, encoder_length, 1]`
    pub target_past: Tensor,
    /// `[B, horizon, 1]`; zero-filled where the frame has no future values
    /// (inference at the series edge).
    pub target_future: Tensor,
    /// Timestamp of each window's first forecast step.
    pub origins: Vec<DateTime<Utc>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }
}

/// Row indices usable as window origins: the full window lies inside the
/// frame and every value the model reads is present. Windows crossing gaps
/// are dropped rather than patched. `require_future_target` is on for
/// training and evaluation windows and off for pure inference.
pub fn window_origins(
    frame: &SeriesFrame,
    layout: &FeatureLayout,
    encoder_length: usize,
    horizon: usize,
    require_future_target: bool,
) -> Result<Vec<usize>> {
    let n = frame.len();
    if n < encoder_length + horizon {
        return Ok(Vec::new());
    }
    let mut past_cols: Vec<&[f64]> = Vec::new();
    for col in layout.observed_columns.iter() {
        past_cols.push(frame.column(&col.name)?);
    }
    let target = frame.column(&layout.target_column)?;
    past_cols.push(target);
    let mut full_cols: Vec<&[f64]> = Vec::new();
    for col in layout.known_columns.iter() {
        full_cols.push(frame.column(&col.name)?);
    }
    let static_cols: Vec<&[f64]> = layout
        .static_columns
        .iter()
        .map(|c| frame.column(&c.name))
        .collect::<gale_data::Result<_>>()?;

    let origins = (encoder_length..=n - horizon)
        .filter(|&t| {
            let past_ok = (t - encoder_length..t)
                .all(|row| past_cols.iter().all(|col| !is_missing(col[row])));
            let known_ok = (t - encoder_length..t + horizon)
                .all(|row| full_cols.iter().all(|col| !is_missing(col[row])));
            let static_ok = static_cols.iter().all(|col| !is_missing(col[t]));
            let future_ok = !require_future_target
                || (t..t + horizon).all(|row| !is_missing(target[row]));
            past_ok && known_ok && static_ok && future_ok
        })
        .collect();
    Ok(origins)
}

/// Gather the rows of `origins` into dense input tensors.
pub fn assemble_batch(
    frame: &SeriesFrame,
    layout: &FeatureLayout,
    encoder_length: usize,
    horizon: usize,
    origins: &[usize],
) -> Result<Batch> {
    if origins.is_empty() {
        return Err(TftError::EmptyDataset("batch"));
    }
    let n = frame.len();
    for &t in origins {
        if t < encoder_length || t + horizon > n {
            return Err(TftError::ShapeMismatch(format!(
                "origin {t} outside frame of {n} rows (need {encoder_length} past, {horizon} future)"
            )));
        }
    }
    let b = origins.len();
    let gather = |names: &[String], rows: &dyn Fn(usize) -> std::ops::Range<usize>| -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|name| frame.column(name))
            .collect::<gale_data::Result<_>>()?;
        let mut out = Vec::new();
        for &t in origins {
            for row in rows(t) {
                for col in &cols {
                    out.push(col[row]);
                }
            }
        }
        Ok(out)
    };

    let static_names: Vec<String> = layout.static_columns.iter().map(|c| c.name.clone()).collect();
    let observed_names: Vec<String> =
        layout.observed_columns.iter().map(|c| c.name.clone()).collect();
    let known_names: Vec<String> = layout.known_columns.iter().map(|c| c.name.clone()).collect();

    let static_inputs = gather(&static_names, &|t| t..t + 1)?;
    let observed = gather(&observed_names, &|t| t - encoder_length..t)?;
    let known = gather(&known_names, &|t| t - encoder_length..t + horizon)?;
    let target = frame.column(&layout.target_column)?;
    let mut target_past = Vec::with_capacity(b * encoder_length);
    let mut target_future = Vec::with_capacity(b * horizon);
    for &t in origins {
        target_past.extend_from_slice(&target[t - encoder_length..t]);
        for row in t..t + horizon {
            let v = target[row];
            target_future.push(if is_missing(v) { 0.0 } else { v });
        }
    }

    Ok(Batch {
        static_inputs: Tensor::new(vec![b, static_names.len()], static_inputs)?,
        observed_past: Tensor::new(vec![b, encoder_length, observed_names.len()], observed)?,
        known_inputs: Tensor::new(
            vec![b, encoder_length + horizon, known_names.len()],
            known,
        )?,
        target_past: Tensor::new(vec![b, encoder_length, 1], target_past)?,
        target_future: Tensor::new(vec![b, horizon, 1], target_future)?,
        origins: origins.iter().map(|&t| frame.timestamps()[t]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::FeatureLayout;
    use chrono::TimeZone;
    use gale_data::{Aggregation, FeatureRole, FeatureSpec};

    fn demo_frame(n: usize) -> SeriesFrame {
        let t0 = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let timestamps: Vec<_> = (0..n)
            .map(|i| t0 + chrono::Duration::hours(i as i64))
            .collect();
        let schema = vec![
            FeatureSpec::new("capacity", FeatureRole::Static, Aggregation::Mean),
            FeatureSpec::new("wind", FeatureRole::ObservedPast, Aggregation::Mean),
            FeatureSpec::new("hour", FeatureRole::KnownFuture, Aggregation::Mean),
            FeatureSpec::new("power", FeatureRole::Target, Aggregation::Mean),
        ];
        let columns = std::collections::BTreeMap::from([
            ("capacity".to_string(), vec![2.0; n]),
            ("wind".to_string(), (0..n).map(|i| i as f64 * 0.1).collect()),
            ("hour".to_string(), (0..n).map(|i| (i % 24) as f64).collect()),
            ("power".to_string(), (0..n).map(|i| i as f64).collect()),
        ]);
        SeriesFrame::new(timestamps, columns, chrono::Duration::hours(1), schema).unwrap()
    }

    fn layout(frame: &SeriesFrame) -> FeatureLayout {
        FeatureLayout::from_frame(frame, None).unwrap()
    }

    #[test]
    fn origins_span_exactly_the_valid_range() {
        let frame = demo_frame(30);
        let origins = window_origins(&frame, &layout(&frame), 4, 2, true).unwrap();
        assert_eq!(origins, (4..=28).collect::<Vec<_>>());
    }

    #[test]
    fn windows_touching_a_gap_are_dropped() {
        let mut frame = demo_frame(30);
        let mut wind = frame.column("wind").unwrap().to_vec();
        wind[10] = f64::NAN;
        frame.set_column("wind", wind).unwrap();
        let origins = window_origins(&frame, &layout(&frame), 4, 2, true).unwrap();
        // Row 10 sits in the past range [t - 4, t) exactly for t in 11..=14.
        for t in 11..=14 {
            assert!(!origins.contains(&t), "origin {t} should be dropped");
        }
        assert!(origins.contains(&4));
        assert!(origins.contains(&10));
        assert!(origins.contains(&15));
    }

    #[test]
    fn missing_future_target_only_blocks_training_windows() {
        let mut frame = demo_frame(20);
        let mut power = frame.column("power").unwrap().to_vec();
        power[19] = f64::NAN;
        frame.set_column("power", power).unwrap();
        let lay = layout(&frame);
        let train = window_origins(&frame, &lay, 4, 2, true).unwrap();
        assert!(!train.contains(&18));
        let infer = window_origins(&frame, &lay, 4, 2, false).unwrap();
        assert!(infer.contains(&18));

        let batch = assemble_batch(&frame, &lay, 4, 2, &[18]).unwrap();
        assert_eq!(batch.target_future.data(), &[18.0, 0.0]);
    }

    #[test]
    fn batch_tensors_have_contract_shapes_and_row_layout() {
        let frame = demo_frame(30);
        let lay = layout(&frame);
        let batch = assemble_batch(&frame, &lay, 4, 2, &[4, 10]).unwrap();
        assert_eq!(batch.len(), 2);
        assert_eq!(batch.static_inputs.shape(), &[2, 1]);
        assert_eq!(batch.observed_past.shape(), &[2, 4, 1]);
        assert_eq!(batch.known_inputs.shape(), &[2, 6, 1]);
        assert_eq!(batch.target_past.shape(), &[2, 4, 1]);
        assert_eq!(batch.target_future.shape(), &[2, 2, 1]);
        assert_eq!(batch.target_past.data(), &[0.0, 1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(batch.known_inputs.data()[..6], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(batch.origins[0], frame.timestamps()[4]);
    }

    #[test]
    fn short_series_has_no_origins() {
        let frame = demo_frame(5);
        let origins = window_origins(&frame, &layout(&frame), 4, 2, true).unwrap();
        assert!(origins.is_empty());
    }
}
