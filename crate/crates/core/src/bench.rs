//! Discretized continuous test functions for optimizer sanity runs.
//!
//! A habitat of `dims` SIVs is a point: SIV `d` picks the grid index of
//! coordinate `d`. SIVs must be distinct, so the universe holds `dims`
//! aliases of each grid index (`siv % points` is the index) and two
//! coordinates can still share a value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bbo::{evolve, BboError};
use crate::select::BboTemplate;

/// Grid points per axis used by default.
pub const DEFAULT_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchFunction {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl BenchFunction {
    pub const ALL: [BenchFunction; 3] = [Self::Sphere, Self::Rastrigin, Self::Rosenbrock];

    /// Half-width of the conventional search box.
    pub fn half_width(self) -> f64 {
        match self {
            Self::Sphere | Self::Rastrigin => 5.12,
            Self::Rosenbrock => 2.048,
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Self::Sphere => x.iter().map(|v| v * v).sum(),
            Self::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            Self::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
        }
    }
}

impl fmt::Display for BenchFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sphere => "sphere",
            Self::Rastrigin => "rastrigin",
            Self::Rosenbrock => "rosenbrock",
        })
    }
}

impl FromStr for BenchFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown function {s:?} (expected sphere, rastrigin or rosenbrock)")
            })
    }
}

/// A test function on an even grid of `points` values per axis. Grid index
/// `points / 2` is the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretized {
    pub function: BenchFunction,
    pub dims: usize,
    pub points: usize,
}

impl Discretized {
    pub fn new(function: BenchFunction, dims: usize, points: usize) -> Result<Self, BboError> {
        if dims == 0 || points < 2 {
            return Err(BboError::InvalidParams(format!(
                "benchmark needs dims >= 1 and at least 2 points per axis, got {dims} and {points}"
            )));
        }
        Ok(Self {
            function,
            dims,
            points,
        })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.function.half_width() / self.points as f64
    }

    pub fn universe_size(&self) -> usize {
        self.dims * self.points
    }

    pub fn decode(&self, sivs: &[usize]) -> Vec<f64> {
        let half = (self.points / 2) as f64;
        sivs.iter()
            .map(|&s| ((s % self.points) as f64 - half) * self.step())
            .collect()
    }

    pub fn value(&self, sivs: &[usize]) -> f64 {
        self.function.value(&self.decode(sivs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub function: BenchFunction,
    pub dims: usize,
    pub points: usize,
    pub seed: u64,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Best value after initialization and after every generation.
    pub history: Vec<f64>,
}

/// Optimizer settings for benchmark runs: H=50, G=50, E=I=1.
///
/// With only a few SIVs, N = S leaves about three rate classes and a
/// mutation ceiling that rarely fires. The benchmark therefore uses one
/// species count per rank (N = H - 1), M = 0.3 and five elites.
pub fn bench_template() -> BboTemplate {
    BboTemplate {
        habitat_count: 50,
        generations: 50,
        elitism: 5,
        max_species: Some(49),
        max_mutation: 0.3,
        ..BboTemplate::default()
    }
}

pub fn run_bench(
    grid: &Discretized,
    template: &BboTemplate,
    seed: u64,
) -> Result<BenchReport, BboError> {
    let params = template.params(grid.dims, grid.universe_size());
    let outcome = evolve(
        &params,
        |s: &[usize]| Ok::<_, BboError>(grid.value(s)),
        seed,
    )?;
    Ok(BenchReport {
        function: grid.function,
        dims: grid.dims,
        points: grid.points,
        seed,
        best_point: grid.decode(outcome.best.sivs()),
        best_value: outcome.best.fitness().expect("evaluated"),
        history: outcome.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_at_grid_points() {
        let g = Discretized::new(BenchFunction::Rastrigin, 3, 64).unwrap();
        assert_eq!(g.value(&[32, 96, 160]), 0.0);
        let s = Discretized::new(BenchFunction::Sphere, 2, 64).unwrap();
        assert_eq!(s.decode(&[0, 127]), vec![-5.12, 31.0 * 0.16]);
        assert_eq!(BenchFunction::Rosenbrock.value(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(
            "Sphere".parse::<BenchFunction>().unwrap(),
            BenchFunction::Sphere
        );
        assert!("ackley".parse::<BenchFunction>().is_err());
    }
}
