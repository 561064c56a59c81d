use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Gradient magnitudes below this floor are compared in absolute terms.
const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Compare `analytic` against central differences of `f` at `point`.
///
/// The relative error per coordinate is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<F>(mut f: F, point: &[f64], analytic: &[f64], tolerance: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if point.len() != analytic.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coordinates but {} analytic partials",
            point.len(),
            analytic.len()
        )));
    }
    let mut x: Vec<f64> = point.to_vec();
    let mut report = GradCheckReport { max_relative_error: 0.0, worst_index: 0, tolerance, coordinates: point.len() };
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = f(&x);
        x[i] = orig - FD_STEP;
        let down = f(&x);
        x[i] = orig;
        if !up.is_finite() || !down.is_finite() || !analytic[i].is_finite() {
            return Err(Error::NonFinite(format!("gradient check coordinate {i}")));
        }
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(REL_FLOOR);
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > report.max_relative_error {
            report.max_relative_error = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quadratic(x: &[f64]) -> f64 {
        // xᵀAx with A = [[2, 1], [1, 3]]
        2.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 3.0 * x[1] * x[1]
    }

    #[test]
    fn quadratic_form_checks_to_machine_precision() {
        let x = [0.7, -1.3];
        let g = [4.0 * x[0] + 2.0 * x[1], 2.0 * x[0] + 6.0 * x[1]];
        let r = grad_check(quadratic, &x, &g, 1e-8).unwrap();
        assert!(r.max_relative_error < 1e-8, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let x = [0.7, -1.3];
        let g = [4.0 * x[0] + 2.0 * x[1], 1.01 * (2.0 * x[0] + 6.0 * x[1])];
        let r = grad_check(quadratic, &x, &g, 1e-4).unwrap();
        assert!(!r.passed());
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn non_finite_function_is_an_error() {
        let r = grad_check(|x: &[f64]| 1.0 / (x[0] - x[0]), &[1.0], &[0.0], 1e-4);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        let r = grad_check(quadratic, &[1.0], &vec![0.0; 2], 1e-4);
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
