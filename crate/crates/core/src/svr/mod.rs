//! nu-SVR with an RBF kernel.
//!
//! The dual is solved in the normalization where each coefficient is boxed by
//! `C / n` and the coefficients of each sign sum to `C * nu / 2`:
//!
//! ```text
//! min  1/2 (a - a*)' K (a - a*) - y' (a - a*)
//! s.t. sum(a) = sum(a*) = C nu / 2,   0 <= a, a* <= C / n
//! ```
//!
//! Prediction is `f(x) = sum_i (a_i - a*_i) k(x_i, x) + b`.

mod grid;
mod kernel;
mod metrics;
mod model;
mod scaler;
mod solver;

pub use grid::{default_grid, grid_search, GridSearchResult};
pub use kernel::{rbf_kernel, KernelMatrix};
pub use metrics::mape;
pub use model::{train_nu_svr, Regressor, SvrModel};
pub use scaler::{Scaler, TargetScaler};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid SVR configuration: {0}")]
    Config(String),
}

/// Hyperparameters of one nu-SVR fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub nu: f64,
    pub cost: f64,
    pub gamma: f64,
    /// Stop once the maximal KKT violation falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            nu: 0.5,
            cost: 1.0,
            gamma: 1.0,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<(), SvrError> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(SvrError::Config(format!("nu {} not in (0, 1]", self.nu)));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(SvrError::Config(format!(
                "cost {} must be positive",
                self.cost
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvrError::Config(format!(
                "gamma {} must be positive",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(SvrError::Config(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SvrError::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// Stable 64-bit digest of the configuration, used as a cache key.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for word in [
            self.nu.to_bits(),
            self.cost.to_bits(),
            self.gamma.to_bits(),
            self.tolerance.to_bits(),
            self.max_iterations as u64,
        ] {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
