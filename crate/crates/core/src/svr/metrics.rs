use super::SvrError;

/// Mean absolute percentage error, in percent.
///
/// Zero actual values are rejected: travel times are strictly positive, so a
/// zero is a data error.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, SvrError> {
    if actual.len() != predicted.len() {
        return Err(SvrError::Dimension {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(SvrError::Domain("MAPE of an empty sample".into()));
    }
    let mut total = 0.0;
    for (k, (&x, &y)) in actual.iter().zip(predicted).enumerate() {
        if x == 0.0 {
            return Err(SvrError::Domain(format!(
                "actual value at index {k} is zero"
            )));
        }
        total += ((x - y) / x).abs();
    }
    Ok(total / actual.len() as f64 * 100.0)
}
