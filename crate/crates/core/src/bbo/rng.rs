use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which operator a random stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init = 0,
    Migration = 1,
    Mutation = 2,
}

/// Derives independent random streams from one master seed.
///
/// Every (generation, habitat, phase) triple gets its own ChaCha stream, so the
/// draws a habitat sees never depend on how many draws another habitat made
/// or on the order in which habitats are processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, generation: usize, habitat: usize, phase: Phase) -> ChaCha8Rng {
        debug_assert!(habitat < (1 << 30));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let id = ((generation as u64) << 32) | ((habitat as u64) << 2) | phase as u64;
        rng.set_stream(id);
        rng
    }

    /// A population-wide stream, distinct from every per-habitat stream.
    pub fn population(&self, generation: usize, phase: Phase) -> ChaCha8Rng {
        self.stream(generation, (1 << 30) - 1, phase)
    }
}
