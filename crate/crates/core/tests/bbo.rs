mod common;

use std::collections::BTreeSet;
use std::convert::Infallible;

use bbosvr::bbo::{
    apply_elitism, emigration_rate, evolve, immigration_rate, initialize, migrate, mutate,
    species_count_probabilities, BboParams, Ecosystem, Habitat, SeedStreams, SpeciesModel,
};
use proptest::prelude::*;
use rand::Rng;

fn params(h: usize, s: usize, universe: usize) -> BboParams {
    BboParams {
        habitat_count: h,
        ..BboParams::for_subset(s, universe)
    }
}

fn evaluated(eco: &mut Ecosystem, f: impl Fn(&[usize]) -> f64) {
    for h in &mut eco.habitats {
        let v = f(h.sivs());
        h.set_fitness(v);
    }
}

fn assert_valid(eco: &Ecosystem, p: &BboParams) {
    assert_eq!(eco.len(), p.habitat_count);
    for h in &eco.habitats {
        assert_eq!(h.sivs().len(), p.siv_count);
        assert!(h.is_valid(p.universe_size), "{:?}", h.sivs());
    }
}

#[test]
fn rates_sum_to_max_when_equal() {
    for n in 1..=10 {
        let p = BboParams {
            max_species: n,
            ..BboParams::for_subset(n, 50)
        };
        for c in 0..=n {
            let l = immigration_rate(c, &p).unwrap();
            let m = emigration_rate(c, &p).unwrap();
            assert!((l + m - 1.0).abs() < 1e-15);
        }
    }
}

#[test]
fn probabilities_are_a_distribution() {
    for n in 1..=30 {
        let p = BboParams {
            max_species: n,
            ..BboParams::for_subset(n, 50)
        };
        let probs = species_count_probabilities(&p);
        assert_eq!(probs.len(), n + 1);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..=n {
            assert!((probs[k] - probs[n - k]).abs() < 1e-12);
        }
    }
}

#[test]
fn elitism_preserves_best_fitness() {
    let p = params(6, 3, 10);
    let streams = SeedStreams::new(5);
    let mut prev = initialize(&p, &streams).unwrap();
    evaluated(&mut prev, |s| s.iter().sum::<usize>() as f64);
    let mut cand = prev.clone();
    for h in &mut cand.habitats {
        h.set_fitness(1e9);
    }
    let next = apply_elitism(&prev, &cand, &p).unwrap();
    let best_prev = prev.best().unwrap().fitness().unwrap();
    assert_eq!(next.best().unwrap().fitness().unwrap(), best_prev);
}

#[test]
fn planted_subset_is_recovered() {
    let planted: BTreeSet<usize> = [3, 11, 17, 25, 30, 41].into_iter().collect();
    let p = BboParams::for_subset(6, 43);
    let mut hits = 0;
    for seed in 0..10 {
        let run = evolve(
            &p,
            |s: &[usize]| {
                let missing = planted.len() - s.iter().filter(|v| planted.contains(v)).count();
                // a weak preference among wrong columns keeps the landscape non-flat
                let tail: f64 = s
                    .iter()
                    .filter(|v| !planted.contains(v))
                    .map(|&v| v as f64 * 1e-4)
                    .sum();
                Ok::<_, Infallible>(missing as f64 + tail)
            },
            seed,
        )
        .unwrap();
        if run.best.sorted_sivs().into_iter().collect::<BTreeSet<_>>() == planted {
            hits += 1;
        }
    }
    assert!(hits >= 9, "recovered in {hits} of 10 seeds");
}

#[test]
fn evolve_is_deterministic_and_counts_evaluations() {
    let p = BboParams {
        generations: 5,
        ..params(12, 3, 20)
    };
    let f = |s: &[usize]| Ok::<_, Infallible>(s.iter().map(|&v| (v as f64 - 7.0).powi(2)).sum());
    let a = evolve(&p, f, 99).unwrap();
    let b = evolve(&p, f, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.history.len(), 6);
    assert!(a.evaluations <= 12 * 6 && a.evaluations >= 12);
}

#[test]
fn fitness_errors_propagate() {
    let p = BboParams {
        generations: 2,
        ..params(5, 2, 8)
    };
    let err = evolve(
        &p,
        |s: &[usize]| {
            if s.contains(&0) {
                Err("no zero")
            } else {
                Ok(1.0)
            }
        },
        1,
    );
    assert!(err.is_err());
    let nan = evolve(&p, |_: &[usize]| Ok::<_, Infallible>(f64::NAN), 1);
    assert!(nan.is_err());
}

#[test]
fn invalid_parameters_are_rejected() {
    let f = |_: &[usize]| Ok::<_, Infallible>(0.0);
    assert!(evolve(&params(5, 6, 5), f, 0).is_err());
    assert!(evolve(&params(0, 1, 5), f, 0).is_err());
    assert!(evolve(
        &BboParams {
            max_mutation: 1.5,
            ..params(5, 1, 5)
        },
        f,
        0
    )
    .is_err());
    assert!(Habitat::new(vec![1, 1], 5).is_err());
    assert!(Habitat::new(vec![7], 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operators_preserve_invariants(
        seed in any::<u64>(),
        h in 1usize..12,
        s in 1usize..8,
        extra in 0usize..10,
        imm in 0.0f64..=1.0,
        mu in 0.0f64..=1.0,
        m in 0.0f64..=1.0,
    ) {
        let p = BboParams { elitism: 0, ..params(h, s, s + extra) };
        let streams = SeedStreams::new(seed);
        let eco = initialize(&p, &streams).unwrap();
        assert_valid(&eco, &p);
        let model = SpeciesModel::pinned(vec![imm; h], vec![mu; h], vec![m; h]);
        let migrated = migrate(&eco, &model, &p, &streams);
        assert_valid(&migrated, &p);
        let mutated = mutate(&migrated, &model, &p, &streams);
        assert_valid(&mutated, &p);
    }

    #[test]
    fn elites_are_untouched(seed in any::<u64>(), h in 3usize..10, q in 1usize..3) {
        let p = BboParams { elitism: q, ..params(h, 3, 12) };
        let streams = SeedStreams::new(seed);
        let mut eco = initialize(&p, &streams).unwrap();
        evaluated(&mut eco, |s| s.iter().map(|&v| v as f64).sum());
        let model = SpeciesModel::from_ecosystem(&eco, &p).unwrap();
        let model = SpeciesModel { mutation: vec![1.0; h], ..model };
        let next = mutate(&migrate(&eco, &model, &p, &streams), &model, &p, &streams);
        for i in 0..h {
            if model.elite[i] {
                prop_assert_eq!(next.habitats[i].sivs(), eco.habitats[i].sivs());
            }
        }
    }

    #[test]
    fn history_is_non_increasing(seed in any::<u64>(), q in 1usize..4) {
        let p = BboParams { generations: 8, elitism: q, ..params(10, 3, 15) };
        let mut r = common::rng(seed);
        let weights: Vec<f64> = (0..15).map(|_| r.random_range(-1.0..1.0)).collect();
        let run = evolve(
            &p,
            |s: &[usize]| Ok::<_, Infallible>(s.iter().map(|&v| weights[v]).product::<f64>().sin()),
            seed,
        ).unwrap();
        for w in run.history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert_eq!(run.best.fitness(), run.history.last().copied());
    }
}
