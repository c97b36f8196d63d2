use super::EvalError;
use crate::metrics::harmonic_mean;

/// Harmonic mean of precision and recall, 0 when both are 0.
///
/// Inputs may be fractions in `[0, 1]` or percentages in `[0, 100]`; a value
/// above 1 marks the pair as percentages. The result is on the input scale.
pub fn f1_from_pr(precision: f64, recall: f64) -> Result<f64, EvalError> {
    for (name, v) in [("precision", precision), ("recall", recall)] {
        if !v.is_finite() || v < 0.0 {
            return Err(EvalError::Domain(format!("{name} = {v}")));
        }
    }
    let max = if precision > 1.0 || recall > 1.0 { 100.0 } else { 1.0 };
    if precision > max || recall > max {
        return Err(EvalError::Domain(format!(
            "precision {precision} / recall {recall} exceed {max}"
        )));
    }
    Ok(harmonic_mean(precision, recall))
}
