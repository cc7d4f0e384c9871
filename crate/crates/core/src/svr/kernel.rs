use ndarray::ArrayView2;

use super::SvrError;

/// `exp(-gamma * |a - b|^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64, SvrError> {
    if a.len() != b.len() {
        return Err(SvrError::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(SvrError::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(rbf(a.iter().copied(), b.iter().copied(), gamma))
}

#[inline]
pub(crate) fn rbf(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>, gamma: f64) -> f64 {
    let d2: f64 = a.zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric Gram matrix of an RBF kernel over the rows of a matrix.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn rbf(x: ArrayView2<'_, f64>, gamma: f64) -> Self {
        let n = x.nrows();
        let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in 0..i {
                let k = rbf(rows[i].iter().copied(), rows[j].iter().copied(), gamma);
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Self { n, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}
