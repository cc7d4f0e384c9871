use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apply_elitism, migrate, mutate, BboError, BboParams, Ecosystem, Habitat, Phase, SeedStreams,
    SpeciesModel,
};

/// Result of a complete optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    /// Lowest-fitness habitat of the final generation.
    pub best: Habitat,
    /// Best fitness after initialization and after each generation (G + 1 entries).
    pub history: Vec<f64>,
    /// Number of fitness-function calls made.
    pub evaluations: usize,
}

/// Random initial ecosystem. Each habitat holds `S` distinct SIVs.
///
/// Values are dealt from successive shuffled decks of the whole universe, so
/// every habitat is a uniform draw without replacement and, whenever
/// `H * S >= universe_size`, every value appears somewhere in the population.
pub fn initialize(params: &BboParams, streams: &SeedStreams) -> Result<Ecosystem, BboError> {
    params.validate()?;
    let mut rng = streams.population(0, Phase::Init);
    let mut deck: Vec<usize> = Vec::new();
    let mut deferred: Vec<usize> = Vec::new();
    let mut habitats = Vec::with_capacity(params.habitat_count);

    for _ in 0..params.habitat_count {
        let mut sivs = Vec::with_capacity(params.siv_count);
        let carried = std::mem::take(&mut deferred);
        for v in carried {
            if sivs.len() < params.siv_count && !sivs.contains(&v) {
                sivs.push(v);
            } else {
                deferred.push(v);
            }
        }
        while sivs.len() < params.siv_count {
            if deck.is_empty() {
                deck = (0..params.universe_size).collect();
                deck.shuffle(&mut rng);
            }
            let v = deck.pop().expect("deck refilled");
            if sivs.contains(&v) {
                deferred.push(v);
            } else {
                sivs.push(v);
            }
        }
        habitats.push(Habitat::new(sivs, params.universe_size)?);
    }
    Ok(Ecosystem::new(habitats))
}

/// Evaluates every habitat without a cached fitness. Habitats are independent,
/// so this runs in parallel; results do not depend on evaluation order.
fn evaluate<F, E>(eco: &mut Ecosystem, fitness: &F) -> Result<usize, BboError>
where
    F: Fn(&[usize]) -> Result<f64, E> + Sync,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    let generation = eco.generation;
    let pending: Vec<usize> = eco
        .habitats
        .iter()
        .enumerate()
        .filter(|(_, h)| h.fitness().is_none())
        .map(|(i, _)| i)
        .collect();
    let results: Vec<(usize, Result<f64, BboError>)> = pending
        .par_iter()
        .map(|&i| {
            let sivs = eco.habitats[i].sivs();
            let fail = |source: Box<dyn std::error::Error + Send + Sync>| BboError::Fitness {
                generation,
                habitat: i,
                sivs: sivs.to_vec(),
                source,
            };
            let r = match fitness(sivs) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(fail(format!("non-finite fitness {v}").into())),
                Err(e) => Err(fail(e.into())),
            };
            (i, r)
        })
        .collect();
    for (i, r) in results {
        eco.habitats[i].set_fitness(r?);
    }
    Ok(pending.len())
}

/// Runs the full generational loop and returns the best final habitat with
/// the per-generation best-fitness history.
///
/// With `elitism >= 1` the history is non-increasing.
pub fn evolve<F, E>(params: &BboParams, fitness: F, seed: u64) -> Result<Evolution, BboError>
where
    F: Fn(&[usize]) -> Result<f64, E> + Sync,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    params.validate()?;
    let streams = SeedStreams::new(seed);
    let mut eco = initialize(params, &streams)?;
    let mut evaluations = evaluate(&mut eco, &fitness)?;
    let mut history = Vec::with_capacity(params.generations + 1);
    history.push(best_fitness(&eco)?);

    for generation in 1..=params.generations {
        eco.generation = generation;
        let model = SpeciesModel::from_ecosystem(&eco, params)?;
        let migrated = migrate(&eco, &model, params, &streams);
        let mut candidate = mutate(&migrated, &model, params, &streams);
        evaluations += evaluate(&mut candidate, &fitness)?;
        eco = apply_elitism(&eco, &candidate, params)?;
        history.push(best_fitness(&eco)?);
        log::debug!("generation {generation}: best {}", history[generation]);
    }

    Ok(Evolution {
        best: eco.best()?.clone(),
        history,
        evaluations,
    })
}

fn best_fitness(eco: &Ecosystem) -> Result<f64, BboError> {
    eco.best()?
        .fitness()
        .ok_or(BboError::Unevaluated { habitat: 0 })
}
