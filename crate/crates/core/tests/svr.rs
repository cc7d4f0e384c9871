mod common;

use bbosvr::svr::{grid_search, train_nu_svr, KernelMatrix, SvrConfig};
use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn cfg(nu: f64, cost: f64, gamma: f64) -> SvrConfig {
    SvrConfig {
        nu,
        cost,
        gamma,
        ..SvrConfig::default()
    }
}

#[test]
fn five_point_dual_matches_oracle() {
    let x = vec![vec![-1.0], vec![-0.4], vec![0.1], vec![0.5], vec![1.0]];
    let y = [0.3, -0.2, 0.8, 0.1, 1.2];
    let c = SvrConfig {
        tolerance: 1e-10,
        ..cfg(0.5, 1.0, 1.0)
    };
    let model = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
    let k = gram(&x, 1.0);
    let (_, oracle) = qp_oracle(&k, &y, 0.5, 1.0, 20_000);

    let mut beta = vec![0.0; 5];
    for (&i, &c) in model.support_indices().iter().zip(model.coefficients()) {
        beta[i] = c;
    }
    let ours = dual_objective(&k, &y, &beta);
    assert!((ours - model.dual_objective()).abs() < 1e-12);
    assert!(
        (ours - oracle).abs() <= 1e-4 * oracle.abs(),
        "solver {ours} vs oracle {oracle}"
    );
}

#[test]
fn small_problems_match_oracle() {
    let mut r = rng(42);
    for case in 0..25 {
        let n = r.random_range(2..=12);
        let dims = r.random_range(1..=3);
        let (x, y) = random_problem(&mut r, n, dims);
        let c = SvrConfig {
            tolerance: 1e-10,
            ..cfg(
                r.random_range(0.1..0.9),
                r.random_range(0.5..20.0),
                r.random_range(0.2..4.0),
            )
        };
        let model = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
        let (_, oracle) = qp_oracle(&gram(&x, c.gamma), &y, c.nu, c.cost, 20_000);
        let ours = model.dual_objective();
        assert!(
            (ours - oracle).abs() <= 1e-4 * oracle.abs().max(1e-9),
            "case {case}: solver {ours} vs oracle {oracle}"
        );
    }
}

#[test]
fn duplicated_rows_give_same_function() {
    let mut r = rng(3);
    let (x, y) = random_problem(&mut r, 15, 2);
    let c = SvrConfig {
        tolerance: 1e-6,
        ..cfg(0.5, 4.0, 1.5)
    };
    let single = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
    let xx: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
    let yy: Vec<f64> = y.iter().chain(&y).cloned().collect();
    let double = train_nu_svr(to_array(&xx).view(), &yy, &c).unwrap();

    let (probe, _) = random_problem(&mut r, 40, 2);
    let a = single.predict(to_array(&probe).view()).unwrap();
    let b = double.predict(to_array(&probe).view()).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-3, "{p} vs {q}");
    }
}

#[test]
fn large_cost_fits_inside_tube() {
    let x = vec![vec![-1.0], vec![-0.3], vec![0.2], vec![0.9]];
    let y = [1.0, -0.5, 0.4, 0.7];
    let c = SvrConfig {
        tolerance: 1e-8,
        ..cfg(0.5, 1000.0, 2.0)
    };
    let model = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
    let pred = model.predict(to_array(&x).view()).unwrap();
    for (p, t) in pred.iter().zip(&y) {
        assert!(
            (p - t).abs() <= model.epsilon() + 1e-6,
            "{p} vs {t}, eps {}",
            model.epsilon()
        );
    }
}

#[test]
fn nu_bounds_training_errors_and_support_vectors() {
    let mut r = rng(11);
    for _ in 0..5 {
        let (x, y) = random_problem(&mut r, 60, 2);
        let nu = r.random_range(0.2..0.8);
        let c = cfg(nu, 10.0, 1.0);
        let model = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
        let pred = model.predict(to_array(&x).view()).unwrap();
        let outside = pred
            .iter()
            .zip(&y)
            .filter(|(p, t)| (*p - *t).abs() > model.epsilon() + 1e-6)
            .count() as f64
            / 60.0;
        let svs = model.support_indices().len() as f64 / 60.0;
        assert!(outside <= nu + 0.05, "outside {outside} nu {nu}");
        assert!(svs >= nu - 0.05, "svs {svs} nu {nu}");
    }
}

#[test]
fn grid_search_prefers_planted_gamma() {
    // Linear target; huge gamma turns the kernel into an identity matrix and
    // cannot generalize, so the small gamma must win.
    let n = 60;
    let x = Array2::from_shape_fn((n, 1), |(i, _)| -1.0 + 2.0 * i as f64 / (n - 1) as f64);
    let y: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
    let grid: Vec<SvrConfig> = [1e4, 0.5].iter().map(|&g| cfg(0.5, 100.0, g)).collect();
    let result = grid_search(x.view(), &y, &grid, 3).unwrap();
    assert_eq!(result.best.gamma, 0.5);
    assert!(result.scores[1] < result.scores[0]);

    // exhaustive rescoring agrees with the search's choice
    let best = result
        .scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(grid[best], result.best);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrix_is_psd(seed in any::<u64>(), gamma in 0.01f64..10.0) {
        let mut r = rng(seed);
        let (x, _) = random_problem(&mut r, 10, 3);
        let k = KernelMatrix::rbf(to_array(&x).view(), gamma);
        let dense: Vec<Vec<f64>> = (0..10).map(|i| k.row(i).to_vec()).collect();
        for i in 0..10 {
            for j in 0..10 {
                prop_assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
        let min = symmetric_eigenvalues(&dense).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9, "smallest eigenvalue {}", min);
    }

    #[test]
    fn mape_is_scale_invariant(
        pairs in proptest::collection::vec((1.0f64..1000.0, 0.0f64..2000.0), 1..30),
        scale in 0.001f64..1000.0,
    ) {
        let actual: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let predicted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let a = bbosvr::svr::mape(&actual, &predicted).unwrap();
        let sa: Vec<f64> = actual.iter().map(|v| v * scale).collect();
        let sp: Vec<f64> = predicted.iter().map(|v| v * scale).collect();
        let b = bbosvr::svr::mape(&sa, &sp).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn equality_constraint_holds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(5..40);
        let (x, y) = random_problem(&mut r, n, 2);
        let c = cfg(r.random_range(0.1..1.0), r.random_range(0.1..50.0), r.random_range(0.1..5.0));
        let model = train_nu_svr(to_array(&x).view(), &y, &c).unwrap();
        let sum: f64 = model.coefficients().iter().sum();
        prop_assert!(sum.abs() < 1e-8);
        let bound = model.box_bound();
        prop_assert!(model.coefficients().iter().all(|v| v.abs() <= bound * (1.0 + 1e-12)));
    }
}
