use serde::{Deserialize, Serialize};

use super::BboError;

/// Pre-specified optimizer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BboParams {
    /// Number of habitats in the ecosystem (H).
    pub habitat_count: usize,
    /// Number of generations (G).
    pub generations: usize,
    /// SIVs per habitat (S).
    pub siv_count: usize,
    /// Habitats carried unchanged into the next generation (Q).
    pub elitism: usize,
    /// Maximum species count of a habitat (N).
    pub max_species: usize,
    /// Maximum emigration rate (E).
    pub max_emigration: f64,
    /// Maximum immigration rate (I).
    pub max_immigration: f64,
    /// Maximum mutation rate (M).
    pub max_mutation: f64,
    /// Number of selectable SIV values; every SIV lies in `0..universe_size`.
    pub universe_size: usize,
}

impl BboParams {
    /// Default mutation ceiling. The original parameter table does not list one.
    pub const DEFAULT_MAX_MUTATION: f64 = 0.05;

    /// Table defaults for a subset search of `siv_count` items out of
    /// `universe_size`: H=50, G=20, Q=2, N=S, E=I=1.
    pub fn for_subset(siv_count: usize, universe_size: usize) -> Self {
        Self {
            habitat_count: 50,
            generations: 20,
            siv_count,
            elitism: 2,
            max_species: siv_count,
            max_emigration: 1.0,
            max_immigration: 1.0,
            max_mutation: Self::DEFAULT_MAX_MUTATION,
            universe_size,
        }
    }

    pub fn validate(&self) -> Result<(), BboError> {
        let fail = |msg: String| Err(BboError::InvalidParams(msg));
        if self.habitat_count == 0 {
            return fail("habitat_count must be positive".into());
        }
        if self.siv_count == 0 {
            return fail("siv_count must be positive".into());
        }
        if self.max_species == 0 {
            return fail("max_species must be positive".into());
        }
        if self.universe_size == 0 {
            return fail("universe_size must be positive".into());
        }
        if self.elitism >= self.habitat_count {
            return fail(format!(
                "elitism ({}) must be smaller than habitat_count ({})",
                self.elitism, self.habitat_count
            ));
        }
        if self.siv_count > self.universe_size {
            return fail(format!(
                "siv_count ({}) exceeds universe_size ({})",
                self.siv_count, self.universe_size
            ));
        }
        if self.max_species < self.siv_count {
            return fail(format!(
                "max_species ({}) must be at least siv_count ({})",
                self.max_species, self.siv_count
            ));
        }
        if !(self.max_emigration > 0.0 && self.max_emigration <= 1.0) {
            return fail(format!(
                "max_emigration {} not in (0, 1]",
                self.max_emigration
            ));
        }
        if !(self.max_immigration > 0.0 && self.max_immigration <= 1.0) {
            return fail(format!(
                "max_immigration {} not in (0, 1]",
                self.max_immigration
            ));
        }
        if !(0.0..=1.0).contains(&self.max_mutation) {
            return fail(format!("max_mutation {} not in [0, 1]", self.max_mutation));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults_are_valid() {
        for s in 1..=10 {
            let p = BboParams::for_subset(s, 43);
            p.validate().unwrap();
            assert_eq!(p.habitat_count, 50);
            assert_eq!(p.generations, 20);
            assert_eq!(p.elitism, 2);
            assert_eq!(p.max_species, s);
        }
    }

    #[test]
    fn rejects_broken_invariants() {
        let base = BboParams::for_subset(6, 43);
        let mut p = base.clone();
        p.elitism = 50;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.siv_count = 44;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.max_species = 5;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.max_emigration = 0.0;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.max_immigration = 1.5;
        assert!(p.validate().is_err());
        let mut p = base;
        p.max_mutation = -0.1;
        assert!(p.validate().is_err());
    }
}
