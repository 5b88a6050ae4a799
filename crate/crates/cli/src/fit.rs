//! Log-log power-law fits.

use layersolve::numerics::linear_fit;
use layersolve::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fewer points than this give no fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Least-squares line through `(ln A, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl Fit {
    /// `exp(intercept)`, the constant `C` in `value = C A^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::NoFitPossible(points.len()));
    }
    if let Some(&(a, value)) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::NonPositiveValue { a, value });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::InvalidInput("fit needs at least two distinct A values".into()));
    }
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(Fit { slope, intercept, r_squared: r_squared.clamp(0.0, 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let a = 10f64.powf(3.0 + 0.5 * i as f64);
                (a, 2.5 * a.powf(0.6))
            })
            .collect();
        let f = fit_exponent(&pts).unwrap();
        assert!(close(f.slope, 0.6, 1e-12));
        assert!(close(f.constant(), 2.5, 1e-10));
        assert!(close(f.r_squared, 1.0, 1e-12));
    }

    #[test]
    fn constant_values_have_zero_slope() {
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5, 1e6].iter().map(|&a| (a, 7.0)).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!(close(f.slope, 0.0, 1e-12));
    }

    #[test]
    fn rejects_short_and_nonpositive_input() {
        assert!(matches!(fit_exponent(&[(1e3, 1.0)]), Err(Error::NoFitPossible(1))));
        let pts = [(1e3, 1.0), (1e4, 0.0), (1e5, 1.0), (1e6, 1.0)];
        assert!(matches!(fit_exponent(&pts), Err(Error::NonPositiveValue { .. })));
    }
}
