use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BboError;

/// One candidate solution: an ordered vector of distinct SIVs plus its cached
/// fitness (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Habitat {
    sivs: Vec<usize>,
    fitness: Option<f64>,
}

impl Habitat {
    /// Builds an unevaluated habitat, checking distinctness and range.
    pub fn new(sivs: Vec<usize>, universe_size: usize) -> Result<Self, BboError> {
        check_sivs(&sivs, universe_size)?;
        Ok(Self {
            sivs,
            fitness: None,
        })
    }

    pub fn with_fitness(
        sivs: Vec<usize>,
        universe_size: usize,
        fitness: f64,
    ) -> Result<Self, BboError> {
        let mut h = Self::new(sivs, universe_size)?;
        h.fitness = Some(fitness);
        Ok(h)
    }

    pub fn sivs(&self) -> &[usize] {
        &self.sivs
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }

    pub fn set_fitness(&mut self, fitness: f64) {
        self.fitness = Some(fitness);
    }

    pub fn contains(&self, siv: usize) -> bool {
        self.sivs.contains(&siv)
    }

    /// SIVs sorted ascending; the canonical identity of the subset.
    pub fn sorted_sivs(&self) -> Vec<usize> {
        let mut v = self.sivs.clone();
        v.sort_unstable();
        v
    }

    /// True when every SIV is distinct and inside `0..universe_size`.
    pub fn is_valid(&self, universe_size: usize) -> bool {
        check_sivs(&self.sivs, universe_size).is_ok()
    }

    /// Writes `value` into position `pos`, keeping SIVs distinct.
    ///
    /// A habitat that already holds `value` keeps its SIV set as is: moving
    /// `value` to `pos` would only reorder it. Returns whether the habitat
    /// changed.
    pub(crate) fn place(&mut self, pos: usize, value: usize) -> bool {
        if self.contains(value) {
            return false;
        }
        self.sivs[pos] = value;
        self.fitness = None;
        true
    }

    /// Replaces position `pos` with a uniformly drawn value the habitat does
    /// not use yet. Returns whether the habitat changed.
    pub(crate) fn replace_with_unused<R: Rng>(
        &mut self,
        pos: usize,
        universe_size: usize,
        rng: &mut R,
    ) -> bool {
        match self.draw_unused(universe_size, rng) {
            Some(v) => {
                self.sivs[pos] = v;
                self.fitness = None;
                true
            }
            None => false,
        }
    }

    fn draw_unused<R: Rng>(&self, universe_size: usize, rng: &mut R) -> Option<usize> {
        let unused = universe_size - self.sivs.len();
        if unused == 0 {
            return None;
        }
        // k-th unused value in ascending order
        let mut k = rng.random_range(0..unused);
        let mut taken = self.sorted_sivs().into_iter().peekable();
        for v in 0..universe_size {
            if taken.peek() == Some(&v) {
                taken.next();
                continue;
            }
            if k == 0 {
                return Some(v);
            }
            k -= 1;
        }
        unreachable!("unused count disagrees with universe scan")
    }
}

fn check_sivs(sivs: &[usize], universe_size: usize) -> Result<(), BboError> {
    if sivs.is_empty() {
        return Err(BboError::InvalidHabitat("habitat has no SIVs".into()));
    }
    let mut sorted = sivs.to_vec();
    sorted.sort_unstable();
    if let Some(&max) = sorted.last() {
        if max >= universe_size {
            return Err(BboError::InvalidHabitat(format!(
                "SIV {max} outside universe of size {universe_size}"
            )));
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(BboError::InvalidHabitat(format!(
            "duplicate SIVs in {sivs:?}"
        )));
    }
    Ok(())
}

/// The population of habitats at one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecosystem {
    pub habitats: Vec<Habitat>,
    pub generation: usize,
}

impl Ecosystem {
    pub fn new(habitats: Vec<Habitat>) -> Self {
        Self {
            habitats,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.habitats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.habitats.is_empty()
    }

    /// Habitat indices from best (lowest fitness) to worst. Ties keep index
    /// order.
    pub fn ranking(&self) -> Result<Vec<usize>, BboError> {
        let fitness = self.fitness_values()?;
        Ok(rank_by_fitness(&fitness))
    }

    pub fn fitness_values(&self) -> Result<Vec<f64>, BboError> {
        self.habitats
            .iter()
            .enumerate()
            .map(|(i, h)| h.fitness.ok_or(BboError::Unevaluated { habitat: i }))
            .collect()
    }

    /// Best evaluated habitat (first in ranking).
    pub fn best(&self) -> Result<&Habitat, BboError> {
        let ranking = self.ranking()?;
        ranking
            .first()
            .map(|&i| &self.habitats[i])
            .ok_or_else(|| BboError::Domain("empty ecosystem".into()))
    }
}

pub(crate) fn rank_by_fitness(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    // sort_by is stable, so equal values stay in index order
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    order
}
