use super::habitat::rank_by_fitness;
use super::{BboError, BboParams, Ecosystem};

fn check_count(count: usize, params: &BboParams) -> Result<(), BboError> {
    if count > params.max_species {
        return Err(BboError::Domain(format!(
            "species count {count} exceeds max_species {}",
            params.max_species
        )));
    }
    Ok(())
}

/// Immigration rate `I * (1 - c / N)`.
pub fn immigration_rate(count: usize, params: &BboParams) -> Result<f64, BboError> {
    check_count(count, params)?;
    let n = params.max_species as f64;
    Ok(params.max_immigration * (1.0 - count as f64 / n))
}

/// Emigration rate `E * c / N`.
pub fn emigration_rate(count: usize, params: &BboParams) -> Result<f64, BboError> {
    check_count(count, params)?;
    let n = params.max_species as f64;
    Ok(params.max_emigration * count as f64 / n)
}

/// Species count per habitat (indexed like `fitness`), derived from fitness
/// rank: `round(N * (H - 1 - rank) / (H - 1))`, rank 0 being the lowest
/// fitness. The best habitat gets N, the worst 0.
pub fn species_counts(fitness: &[f64], params: &BboParams) -> Result<Vec<usize>, BboError> {
    if fitness.is_empty() {
        return Err(BboError::Domain(
            "species_counts needs at least one habitat".into(),
        ));
    }
    let h = fitness.len();
    let n = params.max_species as f64;
    let mut counts = vec![0; h];
    for (rank, idx) in rank_by_fitness(fitness).into_iter().enumerate() {
        counts[idx] = if h == 1 {
            params.max_species
        } else {
            (n * (h - 1 - rank) as f64 / (h - 1) as f64).round() as usize
        };
    }
    Ok(counts)
}

/// Steady-state probability of each species count `0..=N` for the linear
/// birth-death chain with immigration `lambda_k` and emigration `mu_k`:
/// `P_k ∝ (lambda_0 ... lambda_{k-1}) / (mu_1 ... mu_k)`.
pub fn species_count_probabilities(params: &BboParams) -> Vec<f64> {
    let n = params.max_species;
    let nf = n as f64;
    let lambda = |k: usize| params.max_immigration * (1.0 - k as f64 / nf);
    let mu = |k: usize| params.max_emigration * k as f64 / nf;

    // log-domain products keep large N from overflowing
    let mut log_p = Vec::with_capacity(n + 1);
    log_p.push(0.0f64);
    for k in 1..=n {
        let prev = log_p[k - 1];
        log_p.push(prev + lambda(k - 1).ln() - mu(k).ln());
    }
    let peak = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_p.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Mutation rate `M * (1 - p / p_max)`.
pub fn mutation_rate(p: f64, p_max: f64, params: &BboParams) -> Result<f64, BboError> {
    if !(p_max > 0.0) {
        return Err(BboError::Domain(format!(
            "p_max must be positive, got {p_max}"
        )));
    }
    if !(0.0..=p_max).contains(&p) {
        return Err(BboError::Domain(format!(
            "probability {p} outside [0, {p_max}]"
        )));
    }
    Ok(params.max_mutation * (1.0 - p / p_max))
}

/// Per-habitat rates for one generation.
///
/// All fields are public so tests can pin rates directly (see
/// [`SpeciesModel::pinned`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesModel {
    pub counts: Vec<usize>,
    pub immigration: Vec<f64>,
    pub emigration: Vec<f64>,
    /// Species-count probability of each habitat.
    pub probabilities: Vec<f64>,
    pub max_probability: f64,
    pub mutation: Vec<f64>,
    /// Habitats exempt from migration and mutation this generation.
    pub elite: Vec<bool>,
}

impl SpeciesModel {
    /// Builds the model from the current (fully evaluated) ranking. The
    /// `params.elitism` best habitats are flagged elite.
    pub fn from_ecosystem(eco: &Ecosystem, params: &BboParams) -> Result<Self, BboError> {
        let fitness = eco.fitness_values()?;
        let counts = species_counts(&fitness, params)?;
        let table = species_count_probabilities(params);
        let max_probability = table.iter().cloned().fold(0.0, f64::max);

        let mut immigration = Vec::with_capacity(counts.len());
        let mut emigration = Vec::with_capacity(counts.len());
        let mut probabilities = Vec::with_capacity(counts.len());
        let mut mutation = Vec::with_capacity(counts.len());
        for &c in &counts {
            immigration.push(immigration_rate(c, params)?);
            emigration.push(emigration_rate(c, params)?);
            let p = table[c];
            probabilities.push(p);
            mutation.push(mutation_rate(p, max_probability, params)?);
        }

        let mut elite = vec![false; counts.len()];
        for &i in rank_by_fitness(&fitness).iter().take(params.elitism) {
            elite[i] = true;
        }

        Ok(Self {
            counts,
            immigration,
            emigration,
            probabilities,
            max_probability,
            mutation,
            elite,
        })
    }

    /// Test hook: explicit per-habitat rates and no elites.
    pub fn pinned(immigration: Vec<f64>, emigration: Vec<f64>, mutation: Vec<f64>) -> Self {
        let h = immigration.len();
        assert_eq!(emigration.len(), h, "emigration length");
        assert_eq!(mutation.len(), h, "mutation length");
        Self {
            counts: vec![0; h],
            immigration,
            emigration,
            probabilities: vec![1.0; h],
            max_probability: 1.0,
            mutation,
            elite: vec![false; h],
        }
    }

    pub fn with_elites(mut self, elite: Vec<bool>) -> Self {
        assert_eq!(elite.len(), self.immigration.len(), "elite length");
        self.elite = elite;
        self
    }
}
