//! Biogeography-based optimization over fixed-size vectors of distinct
//! integer SIVs (suitability index variables).
//!
//! A candidate solution is a [`Habitat`]; lower fitness is better (the
//! habitat suitability index is the inverse ordering of the fitness value).
//! One generation ranks the [`Ecosystem`], derives a [`SpeciesModel`], applies
//! [`migrate`] and [`mutate`] to the non-elite habitats, re-evaluates them and
//! finally re-injects the previous elites with [`apply_elitism`]. [`evolve`]
//! drives the whole loop.

mod evolve;
mod habitat;
mod operators;
mod params;
mod rng;
mod species;

pub use evolve::{evolve, initialize, Evolution};
pub use habitat::{Ecosystem, Habitat};
pub use operators::{apply_elitism, migrate, mutate};
pub use params::BboParams;
pub use rng::{Phase, SeedStreams};
pub use species::{
    emigration_rate, immigration_rate, mutation_rate, species_count_probabilities, species_counts,
    SpeciesModel,
};

use thiserror::Error;

/// Errors raised by the optimizer.
#[derive(Debug, Error)]
pub enum BboError {
    #[error("invalid BBO parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("habitat {habitat} has not been evaluated")]
    Unevaluated { habitat: usize },
    #[error("invalid habitat: {0}")]
    InvalidHabitat(String),
    #[error("fitness evaluation failed in generation {generation} for habitat {habitat} {sivs:?}: {source}")]
    Fitness {
        generation: usize,
        habitat: usize,
        sivs: Vec<usize>,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}
