//! Two-variable working-set solver for the nu-SVR dual.
//!
//! The dual has two equality constraints (one per sign of the coefficient),
//! so every step moves a pair of variables of the same sign: one up, one
//! down by the same amount. The pair is the maximal violating pair of the
//! sign with the larger violation.

use super::{KernelMatrix, SvrConfig};

/// Eta floor for pairs of (near) identical rows; the step then runs to a bound.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_violation: f64,
}

#[derive(Clone, Copy)]
enum Side {
    Upper,
    Lower,
}

struct Extremes {
    /// argmin of the gradient over variables that can still grow
    up: Option<(usize, f64)>,
    /// argmax of the gradient over variables that can still shrink
    down: Option<(usize, f64)>,
}

impl Extremes {
    fn new() -> Self {
        Self {
            up: None,
            down: None,
        }
    }

    #[inline]
    fn offer(&mut self, t: usize, value: f64, grad: f64, upper: f64) {
        if value < upper && self.up.is_none_or(|(_, g)| grad < g) {
            self.up = Some((t, grad));
        }
        if value > 0.0 && self.down.is_none_or(|(_, g)| grad > g) {
            self.down = Some((t, grad));
        }
    }

    fn violation(&self) -> f64 {
        match (self.up, self.down) {
            (Some((_, gu)), Some((_, gd))) => gd - gu,
            _ => f64::NEG_INFINITY,
        }
    }
}

pub(crate) fn solve(kernel: &KernelMatrix, y: &[f64], config: &SvrConfig) -> DualSolution {
    let l = y.len();
    let upper = config.cost / l as f64;
    let per_side = config.cost * config.nu / 2.0;

    // Feasible start: fill both signs identically, so beta = 0 and K beta = 0.
    let mut alpha = vec![0.0; l];
    let mut remaining = per_side;
    for a in alpha.iter_mut() {
        if remaining <= 0.0 {
            break;
        }
        *a = remaining.min(upper);
        remaining -= *a;
    }
    let mut alpha_star = alpha.clone();

    // f = K (alpha - alpha*). Gradients: upper side f - y, lower side y - f.
    let mut f = vec![0.0; l];
    let mut iterations = 0;
    let mut converged = false;
    let mut max_violation = f64::INFINITY;

    while iterations < config.max_iterations {
        let mut up_side = Extremes::new();
        let mut low_side = Extremes::new();
        for t in 0..l {
            let g = f[t] - y[t];
            up_side.offer(t, alpha[t], g, upper);
            low_side.offer(t, alpha_star[t], -g, upper);
        }
        let (vu, vl) = (up_side.violation(), low_side.violation());
        max_violation = vu.max(vl).max(0.0);
        if max_violation <= config.tolerance {
            converged = true;
            break;
        }
        let (side, ext, violation) = if vu >= vl {
            (Side::Upper, up_side, vu)
        } else {
            (Side::Lower, low_side, vl)
        };
        let (i, _) = ext.up.expect("violation implies a growing variable");
        let (j, _) = ext.down.expect("violation implies a shrinking variable");

        let eta = (kernel.get(i, i) + kernel.get(j, j) - 2.0 * kernel.get(i, j)).max(TAU);
        let vars = match side {
            Side::Upper => &mut alpha,
            Side::Lower => &mut alpha_star,
        };
        let room_i = upper - vars[i];
        let room_j = vars[j];
        let mut delta = violation / eta;
        if delta >= room_i {
            delta = room_i;
        }
        if delta >= room_j {
            delta = room_j;
        }
        vars[i] = if delta == room_i {
            upper
        } else {
            vars[i] + delta
        };
        vars[j] = if delta == room_j {
            0.0
        } else {
            vars[j] - delta
        };

        let step = match side {
            Side::Upper => delta,
            Side::Lower => -delta,
        };
        let (ki, kj) = (kernel.row(i), kernel.row(j));
        for t in 0..l {
            f[t] += step * (ki[t] - kj[t]);
        }
        iterations += 1;
    }

    let r_upper = side_offset(&alpha, upper, |t| f[t] - y[t]);
    let r_lower = side_offset(&alpha_star, upper, |t| y[t] - f[t]);

    DualSolution {
        alpha,
        alpha_star,
        bias: -(r_upper - r_lower) / 2.0,
        epsilon: -(r_upper + r_lower) / 2.0,
        iterations,
        converged,
        max_violation,
    }
}

/// KKT multiplier of one sign's equality constraint: the mean gradient over
/// free variables, or the midpoint of the feasible interval if none is free.
fn side_offset(vars: &[f64], upper: f64, grad: impl Fn(usize) -> f64) -> f64 {
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, &v) in vars.iter().enumerate() {
        let g = grad(t);
        if v >= upper {
            lb = lb.max(g);
        } else if v <= 0.0 {
            ub = ub.min(g);
        } else {
            sum_free += g;
            n_free += 1;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    }
}
