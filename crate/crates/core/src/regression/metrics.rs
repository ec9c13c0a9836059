use super::RegressionError;

fn check(y_true: &[f64], y_pred: &[f64]) -> Result<(), RegressionError> {
    if y_true.len() != y_pred.len() {
        return Err(RegressionError::LengthMismatch { left: y_true.len(), right: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(RegressionError::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(())
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, RegressionError> {
    check(y_true, y_pred)?;
    Ok(y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y_true.len() as f64)
}

/// Coefficient of determination. With constant targets it is 1 for a perfect
/// prediction and 0 otherwise.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64, RegressionError> {
    check(y_true, y_pred)?;
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y_true.iter().map(|a| (a - mean).powi(2)).sum();
    Ok(if ss_tot == 0.0 {
        if ss_res > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        1.0 - ss_res / ss_tot
    })
}
