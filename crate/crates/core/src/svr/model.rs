use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::kernel::rbf;
use super::solver::solve;
use super::{KernelMatrix, Scaler, SvrConfig, SvrError, TargetScaler};

/// A trained nu-SVR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    support_vectors: Array2<f64>,
    /// Row index of each support vector in the training matrix.
    support_indices: Vec<usize>,
    /// `alpha_i - alpha*_i` for each support vector.
    coefficients: Vec<f64>,
    bias: f64,
    gamma: f64,
    /// Half-width of the insensitive tube found by the solver.
    epsilon: f64,
    /// Box constraint `C / n` on every dual variable.
    box_bound: f64,
    dimension: usize,
    training_rows: usize,
    dual_objective: f64,
    iterations: usize,
    converged: bool,
    scaler: Option<Scaler>,
}

/// Fits a nu-SVR on an already scaled matrix.
///
/// A constant target yields a model that predicts that constant. If the
/// solver hits `max_iterations` the model is still returned, with
/// [`SvrModel::converged`] false.
pub fn train_nu_svr(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    config: &SvrConfig,
) -> Result<SvrModel, SvrError> {
    config.validate()?;
    if x.nrows() != y.len() {
        return Err(SvrError::Dimension {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(SvrError::Domain(format!(
            "need at least 2 training rows, got {}",
            y.len()
        )));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(SvrError::Domain(
            "training data contains non-finite values".into(),
        ));
    }

    let n = y.len();
    let box_bound = config.cost / n as f64;
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return Ok(SvrModel {
            support_vectors: Array2::zeros((0, x.ncols())),
            support_indices: Vec::new(),
            coefficients: Vec::new(),
            bias: y[0],
            gamma: config.gamma,
            epsilon: 0.0,
            box_bound,
            dimension: x.ncols(),
            training_rows: n,
            dual_objective: 0.0,
            iterations: 0,
            converged: true,
            scaler: None,
        });
    }

    let kernel = KernelMatrix::rbf(x, config.gamma);
    let sol = solve(&kernel, y, config);
    if !sol.converged {
        log::warn!(
            "nu-SVR stopped after {} iterations with KKT violation {:.3e}",
            sol.iterations,
            sol.max_violation
        );
    }

    let beta: Vec<f64> = sol
        .alpha
        .iter()
        .zip(&sol.alpha_star)
        .map(|(a, b)| a - b)
        .collect();
    let mut dual_objective = 0.0;
    for i in 0..n {
        if beta[i] == 0.0 {
            continue;
        }
        let k_beta: f64 = kernel.row(i).iter().zip(&beta).map(|(k, b)| k * b).sum();
        dual_objective += 0.5 * beta[i] * k_beta - y[i] * beta[i];
    }

    let support_indices: Vec<usize> = (0..n).filter(|&i| beta[i] != 0.0).collect();
    let coefficients = support_indices.iter().map(|&i| beta[i]).collect();
    let support_vectors = x.select(Axis(0), &support_indices);

    Ok(SvrModel {
        support_vectors,
        support_indices,
        coefficients,
        bias: sol.bias,
        gamma: config.gamma,
        epsilon: sol.epsilon,
        box_bound,
        dimension: x.ncols(),
        training_rows: n,
        dual_objective,
        iterations: sol.iterations,
        converged: sol.converged,
        scaler: None,
    })
}

impl SvrModel {
    /// Attaches the scaler used on the training data, enabling
    /// [`SvrModel::predict_raw`].
    pub fn with_scaler(mut self, scaler: Scaler) -> Self {
        self.scaler = Some(scaler);
        self
    }

    pub fn support_vectors(&self) -> ArrayView2<'_, f64> {
        self.support_vectors.view()
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn box_bound(&self) -> f64 {
        self.box_bound
    }

    pub fn training_rows(&self) -> usize {
        self.training_rows
    }

    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    /// Kernel expansion over the support vectors plus bias, on scaled input.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, SvrError> {
        if x.ncols() != self.dimension {
            return Err(SvrError::Dimension {
                expected: self.dimension,
                actual: x.ncols(),
            });
        }
        Ok(x.outer_iter()
            .map(|row| {
                let sum: f64 = self
                    .support_vectors
                    .outer_iter()
                    .zip(&self.coefficients)
                    .map(|(sv, c)| c * rbf(sv.iter().copied(), row.iter().copied(), self.gamma))
                    .sum();
                sum + self.bias
            })
            .collect())
    }

    /// Scales raw input with the attached scaler, then predicts.
    pub fn predict_raw(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, SvrError> {
        let scaler = self
            .scaler
            .as_ref()
            .ok_or_else(|| SvrError::Domain("model has no attached scaler".into()))?;
        self.predict(scaler.transform(x)?.view())
    }
}

/// nu-SVR on a target mapped onto `[-1, 1]`, predicting in the original
/// units. Keeps the cost grid meaningful whatever the target's magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub model: SvrModel,
    pub target: TargetScaler,
}

impl Regressor {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[f64], config: &SvrConfig) -> Result<Self, SvrError> {
        let target = TargetScaler::fit(y)?;
        let z: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let model = train_nu_svr(x, &z, config)?;
        Ok(Self { model, target })
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, SvrError> {
        Ok(self
            .model
            .predict(x)?
            .into_iter()
            .map(|z| self.target.inverse(z))
            .collect())
    }
}
