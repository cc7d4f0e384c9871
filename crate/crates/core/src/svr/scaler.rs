use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::SvrError;

/// Per-column min-max scaling onto `[-1, 1]`.
///
/// Fitted on training rows only; other rows reuse the training range and are
/// not clipped. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: ArrayView2<'_, f64>) -> Result<Self, SvrError> {
        if train.nrows() == 0 || train.ncols() == 0 {
            return Err(SvrError::Domain(
                "cannot fit a scaler on an empty matrix".into(),
            ));
        }
        let mut min = vec![f64::INFINITY; train.ncols()];
        let mut max = vec![f64::NEG_INFINITY; train.ncols()];
        for row in train.outer_iter() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn columns(&self) -> usize {
        self.min.len()
    }

    pub fn is_constant(&self, column: usize) -> bool {
        self.max[column] <= self.min[column]
    }

    pub fn transform(&self, m: ArrayView2<'_, f64>) -> Result<Array2<f64>, SvrError> {
        if m.ncols() != self.columns() {
            return Err(SvrError::Dimension {
                expected: self.columns(),
                actual: m.ncols(),
            });
        }
        let mut out = m.to_owned();
        for mut row in out.outer_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.is_constant(j) {
                    0.0
                } else {
                    2.0 * (*v - self.min[j]) / (self.max[j] - self.min[j]) - 1.0
                };
            }
        }
        Ok(out)
    }

    /// Restricts the scaler to a subset of columns.
    pub fn select(&self, columns: &[usize]) -> Self {
        Self {
            min: columns.iter().map(|&c| self.min[c]).collect(),
            max: columns.iter().map(|&c| self.max[c]).collect(),
        }
    }
}

/// Affine map of a target vector onto `[-1, 1]`, with its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    center: f64,
    half_range: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> Result<Self, SvrError> {
        if y.is_empty() {
            return Err(SvrError::Domain(
                "cannot fit a target scaler on no values".into(),
            ));
        }
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let half = (hi - lo) / 2.0;
        Ok(Self {
            center: (hi + lo) / 2.0,
            half_range: if half > 0.0 { half } else { 1.0 },
        })
    }

    pub fn forward(&self, y: f64) -> f64 {
        (y - self.center) / self.half_range
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.half_range + self.center
    }
}
