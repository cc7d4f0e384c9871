//! Hybrid BBO/SVR feature selection.
//!
//! A habitat's SIVs are predictor column indices and its fitness is the
//! test-partition MAPE of a nu-SVR trained on just those columns.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbo::{evolve, BboError, BboParams};
use crate::svr::{grid_search, mape, Regressor, Scaler, SvrConfig, SvrError};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid subset: {0}")]
    Subset(String),
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error(transparent)]
    Bbo(#[from] BboError),
}

/// Feature matrix, target and chronological train/test boundary.
///
/// Features are scaled with a scaler fitted on the training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    raw: Array2<f64>,
    scaled: Array2<f64>,
    target: Vec<f64>,
    split: usize,
    scaler: Scaler,
}

impl Dataset {
    /// Rows `..split` train, rows `split..` test.
    pub fn new(
        features: Array2<f64>,
        target: Vec<f64>,
        names: Vec<String>,
        split: usize,
    ) -> Result<Self, SelectError> {
        let n = features.nrows();
        if target.len() != n {
            return Err(SelectError::Dataset(format!(
                "{n} feature rows but {} target values",
                target.len()
            )));
        }
        if names.len() != features.ncols() {
            return Err(SelectError::Dataset(format!(
                "{} column names for {} columns",
                names.len(),
                features.ncols()
            )));
        }
        if features.ncols() == 0 {
            return Err(SelectError::Dataset(
                "dataset has no predictor columns".into(),
            ));
        }
        if split == 0 || split >= n {
            return Err(SelectError::Dataset(format!(
                "split {split} must lie strictly inside 0..{n}"
            )));
        }
        if let Some(k) = target.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(SelectError::Dataset(format!(
                "target at row {k} is not a positive travel time"
            )));
        }
        let scaler = Scaler::fit(features.slice(ndarray::s![..split, ..]))?;
        let scaled = scaler.transform(features.view())?;
        Ok(Self {
            names,
            raw: features,
            scaled,
            target,
            split,
            scaler,
        })
    }

    /// Chronological split with the first `floor(n * fraction)` rows training.
    pub fn with_fraction(
        features: Array2<f64>,
        target: Vec<f64>,
        names: Vec<String>,
        fraction: f64,
    ) -> Result<Self, SelectError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(SelectError::Dataset(format!(
                "split fraction {fraction} not in (0, 1)"
            )));
        }
        let split = (features.nrows() as f64 * fraction).floor() as usize;
        Self::new(features, target, names, split)
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn columns(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn raw(&self) -> ArrayView2<'_, f64> {
        self.raw.view()
    }

    pub fn scaled(&self) -> ArrayView2<'_, f64> {
        self.scaled.view()
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn train_target(&self) -> &[f64] {
        &self.target[..self.split]
    }

    pub fn test_target(&self) -> &[f64] {
        &self.target[self.split..]
    }

    /// Scaled training rows restricted to `columns`.
    pub fn train_features(&self, columns: &[usize]) -> Array2<f64> {
        self.scaled
            .slice(ndarray::s![..self.split, ..])
            .select(Axis(1), columns)
    }

    /// Scaled test rows restricted to `columns`.
    pub fn test_features(&self, columns: &[usize]) -> Array2<f64> {
        self.scaled
            .slice(ndarray::s![self.split.., ..])
            .select(Axis(1), columns)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn all_columns(&self) -> Vec<usize> {
        (0..self.columns()).collect()
    }

    fn canonical(&self, subset: &[usize]) -> Result<Vec<usize>, SelectError> {
        if subset.is_empty() {
            return Err(SelectError::Subset("subset is empty".into()));
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(SelectError::Subset(format!(
                "duplicate columns in {subset:?}"
            )));
        }
        if let Some(&c) = sorted.last().filter(|&&c| c >= self.columns()) {
            return Err(SelectError::Subset(format!(
                "column {c} out of range (dataset has {})",
                self.columns()
            )));
        }
        Ok(sorted)
    }
}

/// Test-partition MAPE of a nu-SVR trained on the training partition
/// restricted to `subset`. Column order does not matter.
pub fn evaluate_subset(
    data: &Dataset,
    subset: &[usize],
    svr: &SvrConfig,
) -> Result<f64, SelectError> {
    let cols = data.canonical(subset)?;
    fit_and_score(data, &cols, svr)
}

fn fit_and_score(data: &Dataset, cols: &[usize], svr: &SvrConfig) -> Result<f64, SelectError> {
    let model = Regressor::fit(data.train_features(cols).view(), data.train_target(), svr)?;
    let predicted = model.predict(data.test_features(cols).view())?;
    Ok(mape(data.test_target(), &predicted)?)
}

/// Optional per-subset hyperparameter re-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retune {
    pub grid: Vec<SvrConfig>,
    pub folds: usize,
}

/// Optimizer settings shared by every scenario; `siv_count` and
/// `universe_size` are filled in per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BboTemplate {
    pub habitat_count: usize,
    pub generations: usize,
    pub elitism: usize,
    /// `None` means N = S.
    pub max_species: Option<usize>,
    pub max_emigration: f64,
    pub max_immigration: f64,
    pub max_mutation: f64,
}

impl Default for BboTemplate {
    fn default() -> Self {
        let p = BboParams::for_subset(1, 1);
        Self {
            habitat_count: p.habitat_count,
            generations: p.generations,
            elitism: p.elitism,
            max_species: None,
            max_emigration: p.max_emigration,
            max_immigration: p.max_immigration,
            max_mutation: p.max_mutation,
        }
    }
}

impl BboTemplate {
    pub fn params(&self, siv_count: usize, universe_size: usize) -> BboParams {
        BboParams {
            habitat_count: self.habitat_count,
            generations: self.generations,
            siv_count,
            elitism: self.elitism,
            max_species: self.max_species.unwrap_or(siv_count),
            max_emigration: self.max_emigration,
            max_immigration: self.max_immigration,
            max_mutation: self.max_mutation,
            universe_size,
        }
    }
}

/// Outcome of one BBO run for a fixed number of predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub siv_count: usize,
    /// Selected column indices, ascending.
    pub columns: Vec<usize>,
    pub names: Vec<String>,
    pub mape: f64,
    /// Best MAPE after initialization and after every generation.
    pub convergence: Vec<f64>,
    pub seed: u64,
    /// Fitness requests made by the optimizer (cache hits included).
    pub evaluations: usize,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

/// All scenarios plus the all-columns baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub baseline_mape: f64,
    pub baseline_columns: usize,
    pub scenarios: Vec<ScenarioResult>,
}

/// Memoizing subset evaluator bound to one dataset and SVR configuration.
///
/// Safe to share across threads; the cache is keyed by the sorted subset and
/// the configuration digest.
pub struct FeatureSelector<'a> {
    data: &'a Dataset,
    svr: SvrConfig,
    retune: Option<Retune>,
    cache: Mutex<HashMap<(Vec<usize>, u64), f64>>,
    fits: AtomicUsize,
}

impl<'a> FeatureSelector<'a> {
    pub fn new(data: &'a Dataset, svr: SvrConfig) -> Self {
        Self {
            data,
            svr,
            retune: None,
            cache: Mutex::new(HashMap::new()),
            fits: AtomicUsize::new(0),
        }
    }

    /// Re-run a grid search on every subset before scoring it.
    pub fn with_retune(mut self, retune: Retune) -> Self {
        self.retune = Some(retune);
        self
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn svr(&self) -> &SvrConfig {
        &self.svr
    }

    /// Number of models actually trained (cache misses).
    pub fn fits(&self) -> usize {
        self.fits.load(Ordering::Relaxed)
    }

    pub fn cached_subsets(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn evaluate(&self, subset: &[usize]) -> Result<f64, SelectError> {
        let cols = self.data.canonical(subset)?;
        let key = (cols, self.svr.digest());
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let config = match &self.retune {
            None => self.svr,
            Some(r) => {
                grid_search(
                    self.data.train_features(&key.0).view(),
                    self.data.train_target(),
                    &r.grid,
                    r.folds,
                )?
                .best
            }
        };
        let value = fit_and_score(self.data, &key.0, &config)?;
        self.fits.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }

    /// Runs the optimizer for subsets of `siv_count` columns.
    pub fn run_scenario(
        &self,
        siv_count: usize,
        template: &BboTemplate,
        seed: u64,
    ) -> Result<ScenarioResult, SelectError> {
        let columns = self.data.columns();
        if siv_count == 0 || siv_count > columns {
            return Err(SelectError::Subset(format!(
                "cannot select {siv_count} of {columns} columns"
            )));
        }
        let params = template.params(siv_count, columns);
        let started = Instant::now();
        let requests = AtomicUsize::new(0);
        let outcome = evolve(
            &params,
            |sivs: &[usize]| {
                requests.fetch_add(1, Ordering::Relaxed);
                self.evaluate(sivs)
            },
            seed,
        )?;
        let selected = outcome.best.sorted_sivs();
        Ok(ScenarioResult {
            siv_count,
            names: selected
                .iter()
                .map(|&c| self.data.names()[c].clone())
                .collect(),
            columns: selected,
            mape: outcome
                .best
                .fitness()
                .expect("evolve returns evaluated habitats"),
            convergence: outcome.history,
            seed,
            evaluations: requests.into_inner(),
            elapsed_ms: started.elapsed().as_millis(),
        })
    }

    /// One scenario per predictor count in `counts`, plus the all-columns
    /// baseline. Scenario `s` runs with [`scenario_seed`]`(seed, s)`.
    pub fn run_all_scenarios(
        &self,
        counts: std::ops::RangeInclusive<usize>,
        template: &BboTemplate,
        seed: u64,
    ) -> Result<SelectionReport, SelectError> {
        if *counts.start() == 0 || *counts.end() > self.data.columns() || counts.is_empty() {
            return Err(SelectError::Subset(format!(
                "scenario range {}..{} outside 1..{}",
                counts.start(),
                counts.end(),
                self.data.columns()
            )));
        }
        let baseline_mape = self.evaluate(&self.data.all_columns())?;
        let scenarios = counts
            .map(|s| {
                let r = self.run_scenario(s, template, scenario_seed(seed, s));
                if let Ok(r) = &r {
                    log::info!("S={s}: MAPE {:.4} with {:?}", r.mape, r.names);
                }
                r
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SelectionReport {
            baseline_mape,
            baseline_columns: self.data.columns(),
            scenarios,
        })
    }
}

/// Per-scenario seed derived from the master seed.
pub fn scenario_seed(seed: u64, siv_count: usize) -> u64 {
    seed ^ (siv_count as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}
