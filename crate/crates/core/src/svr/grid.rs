use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mape, Regressor, SvrConfig, SvrError};

/// Log-spaced default grid: `C = 2^-5, 2^-3, ..., 2^15`, `gamma = 2^-15,
/// 2^-13, ..., 2^3`, `nu = 0.5`.
pub fn default_grid(tolerance: f64, max_iterations: usize) -> Vec<SvrConfig> {
    let mut grid = Vec::new();
    for c_exp in (-5..=15).step_by(2) {
        for g_exp in (-15..=3).step_by(2) {
            grid.push(SvrConfig {
                nu: 0.5,
                cost: 2f64.powi(c_exp),
                gamma: 2f64.powi(g_exp),
                tolerance,
                max_iterations,
            });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: SvrConfig,
    /// Mean cross-validated MAPE of each grid entry, in grid order.
    pub scores: Vec<f64>,
}

/// Picks the configuration with the lowest mean cross-validated MAPE.
///
/// Folds are contiguous blocks of rows in their given (chronological) order;
/// each block is held out once. Ties go to the earlier grid entry.
pub fn grid_search(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    grid: &[SvrConfig],
    folds: usize,
) -> Result<GridSearchResult, SvrError> {
    if grid.is_empty() {
        return Err(SvrError::Domain(
            "grid search needs at least one configuration".into(),
        ));
    }
    if x.nrows() != y.len() {
        return Err(SvrError::Dimension {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    let n = y.len();
    if folds < 2 {
        return Err(SvrError::Domain(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > n || n - n.div_ceil(folds) < 2 {
        return Err(SvrError::Domain(format!(
            "{n} rows cannot be split into {folds} folds with 2 training rows each"
        )));
    }
    let bounds: Vec<(usize, usize)> = (0..folds)
        .map(|k| (k * n / folds, (k + 1) * n / folds))
        .collect();

    let scores: Vec<f64> = grid
        .par_iter()
        .map(|config| cross_validate(x, y, &bounds, config))
        .collect::<Result<_, _>>()?;

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: grid[best],
        scores,
    })
}

fn cross_validate(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    bounds: &[(usize, usize)],
    config: &SvrConfig,
) -> Result<f64, SvrError> {
    let n = y.len();
    let mut total = 0.0;
    for &(lo, hi) in bounds {
        let train: Vec<usize> = (0..lo).chain(hi..n).collect();
        let test: Vec<usize> = (lo..hi).collect();
        let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let test_y: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        let model = Regressor::fit(x.select(Axis(0), &train).view(), &train_y, config)?;
        let pred = model.predict(x.select(Axis(0), &test).view())?;
        total += mape(&test_y, &pred)?;
    }
    Ok(total / bounds.len() as f64)
}
