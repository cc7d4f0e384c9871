//! Biogeography-based feature selection wrapped around a nu-SVR regressor,
//! plus the data-preparation pipeline that turns raw vehicle-detector,
//! toll-transit and rainfall records into a travel-time dataset.
//!
//! Module map:
//!
//! * [`bbo`] - generic biogeography-based optimizer over integer SIV vectors.
//! * [`svr`] - nu-SVR with an RBF kernel, min-max scaling, grid search and MAPE.
//! * [`select`] - the hybrid wiring: habitats are predictor subsets, fitness is
//!   test-set MAPE.
//! * [`traffic`] - detector elimination, imputation, travel-time aggregation,
//!   rainfall accumulation and dataset assembly.
//! * [`synth`] - synthetic raw inputs with a planted ground truth.
//! * [`bench`] - discretized continuous test functions for optimizer sanity runs.
//! * [`cli`] - command implementations behind the `bbosvr` binary.

pub mod bbo;
pub mod bench;
pub mod cli;
pub mod select;
pub mod svr;
pub mod synth;
pub mod traffic;
