use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SPLIT_ROWS: usize = 25;

/// Chronological train/holdout partition of matrix rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChronoSplit {
    pub train: Range<usize>,
    pub holdout: Range<usize>,
}

/// First `floor(train_fraction * n)` rows train, the rest are held out.
pub fn chrono_split(n_rows: usize, train_fraction: f64) -> Result<ChronoSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if n_rows < MIN_SPLIT_ROWS {
        return Err(Error::InsufficientHistory(format!(
            "chronological split needs at least {MIN_SPLIT_ROWS} rows, got {n_rows}"
        )));
    }
    // The epsilon keeps 0.29 * 100 from flooring to 28.
    let n_train = ((train_fraction * n_rows as f64) + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n_rows {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {train_fraction} leaves an empty side for {n_rows} rows"
        )));
    }
    Ok(ChronoSplit {
        train: 0..n_train,
        holdout: n_train..n_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub validation: Range<usize>,
}

/// Expanding-window folds over the training rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

/// Splits `n_rows` into `k + 1` consecutive blocks (earliest blocks absorb the
/// remainder); fold `i` trains on blocks `0..i` and validates on block `i`.
pub fn ts_cv_folds(n_rows: usize, k: usize) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::InvalidArgument("fold count must be positive".into()));
    }
    if n_rows < k + 1 {
        return Err(Error::InsufficientHistory(format!(
            "{k}-fold time series CV needs at least {} rows, got {n_rows}",
            k + 1
        )));
    }
    let blocks = k + 1;
    let (size, extra) = (n_rows / blocks, n_rows % blocks);
    let mut bounds = vec![0];
    for b in 0..blocks {
        bounds.push(bounds[b] + size + usize::from(b < extra));
    }
    let folds = (1..blocks)
        .map(|i| Fold {
            train: 0..bounds[i],
            validation: bounds[i]..bounds[i + 1],
        })
        .collect();
    Ok(FoldPlan { folds })
}
