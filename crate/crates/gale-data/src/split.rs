use crate::frame::SeriesFrame;
use crate::{DataError, Result};
use chrono::Datelike;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBoundaries {
    pub train_years: Vec<i32>,
    pub val_years: Vec<i32>,
    pub test_years: Vec<i32>,
}

/// Chronologically ordered train/validation/test frames.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: SeriesFrame,
    pub val: SeriesFrame,
    pub test: SeriesFrame,
    pub boundaries: SplitBoundaries,
}

/// Route rows by calendar year; rows in none of the lists are dropped.
pub fn split_by_year(
    frame: &SeriesFrame,
    train_years: &[i32],
    val_years: &[i32],
    test_years: &[i32],
) -> Result<DatasetSplit> {
    let mut seen = std::collections::BTreeSet::new();
    for y in train_years.iter().chain(val_years).chain(test_years) {
        if !seen.insert(*y) {
            return Err(DataError::OverlappingYears(*y));
        }
    }
    let part = |years: &[i32], name: &str| -> Result<SeriesFrame> {
        let rows: Vec<usize> = frame
            .timestamps()
            .iter()
            .enumerate()
            .filter(|(_, ts)| years.contains(&ts.year()))
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(DataError::EmptySplit(name.to_string()));
        }
        frame.select_rows(&rows)
    };
    Ok(DatasetSplit {
        train: part(train_years, "train")?,
        val: part(val_years, "val")?,
        test: part(test_years, "test")?,
        boundaries: SplitBoundaries {
            train_years: train_years.to_vec(),
            val_years: val_years.to_vec(),
            test_years: test_years.to_vec(),
        },
    })
}

/// Contiguous fractional split for series too short to span whole years;
/// `train_frac + val_frac` must leave room for a nonempty test slice.
pub fn split_by_fraction(
    frame: &SeriesFrame,
    train_frac: f64,
    val_frac: f64,
) -> Result<DatasetSplit> {
    let n = frame.len();
    let n_train = (n as f64 * train_frac).floor() as usize;
    let n_val = (n as f64 * val_frac).floor() as usize;
    if n_train == 0 {
        return Err(DataError::EmptySplit("train".into()));
    }
    if n_val == 0 {
        return Err(DataError::EmptySplit("val".into()));
    }
    if n_train + n_val >= n {
        return Err(DataError::EmptySplit("test".into()));
    }
    let years_of = |frame: &SeriesFrame| -> Vec<i32> {
        let mut ys: Vec<i32> = frame.timestamps().iter().map(|ts| ts.year()).collect();
        ys.dedup();
        ys
    };
    let train = frame.select_rows(&(0..n_train).collect::<Vec<_>>())?;
    let val = frame.select_rows(&(n_train..n_train + n_val).collect::<Vec<_>>())?;
    let test = frame.select_rows(&(n_train + n_val..n).collect::<Vec<_>>())?;
    let boundaries = SplitBoundaries {
        train_years: years_of(&train),
        val_years: years_of(&val),
        test_years: years_of(&test),
    };
    Ok(DatasetSplit {
        train,
        val,
        test,
        boundaries,
    })
}
