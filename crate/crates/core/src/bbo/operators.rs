use rand::Rng;

use super::{BboError, BboParams, Ecosystem, Phase, SeedStreams, SpeciesModel};

/// Migration: every non-elite habitat `i` immigrates with probability
/// `lambda_i`; if it does, each habitat `j` (itself included) is accepted as a
/// donor with probability `mu_j` and contributes one uniformly chosen SIV,
/// which overwrites a uniformly chosen position of `i`.
///
/// Donor SIVs are read from the ecosystem as it was before migration started.
/// A donor SIV the recipient already holds leaves the recipient unchanged.
pub fn migrate(
    eco: &Ecosystem,
    model: &SpeciesModel,
    params: &BboParams,
    streams: &SeedStreams,
) -> Ecosystem {
    let mut next = eco.clone();
    let h = eco.len();
    for i in 0..h {
        if model.elite[i] {
            continue;
        }
        let mut rng = streams.stream(eco.generation, i, Phase::Migration);
        if rng.random::<f64>() >= model.immigration[i] {
            continue;
        }
        for j in 0..h {
            if rng.random::<f64>() >= model.emigration[j] {
                continue;
            }
            let donor = eco.habitats[j].sivs();
            let sigma = donor[rng.random_range(0..donor.len())];
            let target = &mut next.habitats[i];
            let pos = rng.random_range(0..target.sivs().len());
            target.place(pos, sigma);
        }
        debug_assert!(next.habitats[i].is_valid(params.universe_size));
    }
    next
}

/// Mutation: every position of a non-elite habitat `i` is, with probability
/// `m_i`, replaced by a uniformly drawn value the habitat does not already
/// hold. With no unused values left the habitat is unchanged.
pub fn mutate(
    eco: &Ecosystem,
    model: &SpeciesModel,
    params: &BboParams,
    streams: &SeedStreams,
) -> Ecosystem {
    let mut next = eco.clone();
    for (i, habitat) in next.habitats.iter_mut().enumerate() {
        if model.elite[i] || model.mutation[i] <= 0.0 {
            continue;
        }
        let mut rng = streams.stream(eco.generation, i, Phase::Mutation);
        for pos in 0..habitat.sivs().len() {
            if rng.random::<f64>() < model.mutation[i] {
                habitat.replace_with_unused(pos, params.universe_size, &mut rng);
            }
        }
    }
    next
}

/// Replaces the `Q` worst habitats of `candidate` with the `Q` best of
/// `previous`. `Q = 0` returns the candidate, `Q >= H` the previous ecosystem.
pub fn apply_elitism(
    previous: &Ecosystem,
    candidate: &Ecosystem,
    params: &BboParams,
) -> Result<Ecosystem, BboError> {
    let prev_rank = previous.ranking()?;
    let cand_rank = candidate.ranking()?;
    let q = params.elitism;
    if q == 0 {
        return Ok(candidate.clone());
    }
    if q >= candidate.len() {
        return Ok(previous.clone());
    }
    let mut next = candidate.clone();
    let worst = cand_rank.iter().rev().take(q);
    for (&slot, &elite) in worst.zip(prev_rank.iter()) {
        next.habitats[slot] = previous.habitats[elite].clone();
    }
    Ok(next)
}
