//! Test-only oracles, independent of the crate's solver and kernel code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense RBF Gram matrix, computed directly.
pub fn gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
                    (-gamma * d).exp()
                })
                .collect()
        })
        .collect()
}

/// `1/2 beta' K beta - y' beta`.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * k[i][j] * beta[j];
        }
    }
    0.5 * quad - y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

/// Euclidean projection onto `{0 <= x <= cap, sum x = total}` by bisection on
/// the shift.
fn project_capped_simplex(v: &[f64], cap: f64, total: f64) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|&x| (x - tau).clamp(0.0, cap)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - cap - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|&x| (x - tau).clamp(0.0, cap)).collect()
}

/// Dense nu-SVR dual oracle: FISTA with adaptive restart over
/// `(alpha, alpha*)`, each confined to a capped simplex of mass `C nu / 2` and
/// cap `C / n`. Returns `beta = alpha - alpha*` and the objective.
pub fn qp_oracle(
    k: &[Vec<f64>],
    y: &[f64],
    nu: f64,
    cost: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let n = y.len();
    let cap = cost / n as f64;
    let mass = cost * nu / 2.0;
    let row_sum = k
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (2.0 * row_sum);

    let start = project_capped_simplex(&vec![0.0; n], cap, mass);
    let (mut a, mut b) = (start.clone(), start);
    let (mut ya, mut yb) = (a.clone(), b.clone());
    let mut t = 1.0f64;
    let objective = |a: &[f64], b: &[f64]| {
        let beta: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
        dual_objective(k, y, &beta)
    };
    let mut current = objective(&a, &b);

    for _ in 0..iterations {
        let beta: Vec<f64> = ya.iter().zip(&yb).map(|(p, q)| p - q).collect();
        let grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum::<f64>() - y[i])
            .collect();
        let na = project_capped_simplex(
            &ya.iter()
                .zip(&grad)
                .map(|(v, g)| v - step * g)
                .collect::<Vec<_>>(),
            cap,
            mass,
        );
        let nb = project_capped_simplex(
            &yb.iter()
                .zip(&grad)
                .map(|(v, g)| v + step * g)
                .collect::<Vec<_>>(),
            cap,
            mass,
        );
        let next = objective(&na, &nb);
        if next > current {
            // restart momentum
            t = 1.0;
            ya = a.clone();
            yb = b.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let w = (t - 1.0) / t_next;
        ya = na.iter().zip(&a).map(|(x, xo)| x + w * (x - xo)).collect();
        yb = nb.iter().zip(&b).map(|(x, xo)| x + w * (x - xo)).collect();
        a = na;
        b = nb;
        t = t_next;
        current = next;
    }
    let beta: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
    (beta, current)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Random regression problem with `n` rows in `[-1, 1]^dims`.
pub fn random_problem<R: Rng>(rng: &mut R, n: usize, dims: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y = x
        .iter()
        .map(|r| r.iter().map(|v| v.sin()).sum::<f64>() + rng.random_range(-0.3..0.3))
        .collect();
    (x, y)
}

pub fn to_array(x: &[Vec<f64>]) -> ndarray::Array2<f64> {
    let cols = x.first().map_or(0, |r| r.len());
    ndarray::Array2::from_shape_fn((x.len(), cols), |(i, j)| x[i][j])
}

pub mod fixtures;
