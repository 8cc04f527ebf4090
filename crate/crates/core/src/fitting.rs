//! Ordinary least-squares fits for the two scaling laws: `y = −c₀ + c₁·L`
//! and `y = c·α^e` (fitted as a line in log-log space).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Linear,
    PowerLaw,
}

/// Two-parameter fit.
///
/// `Linear`: `y = −first + second·L` (the `(P⁰, P¹)` convention).
/// `PowerLaw`: `y = first·α^second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub first: f64,
    pub second: f64,
    pub first_stderr: f64,
    pub second_stderr: f64,
    /// Euclidean norm of the residuals in the fitted space.
    pub residual_norm: f64,
    pub points: usize,
}

struct Line {
    intercept: f64,
    slope: f64,
    se_intercept: f64,
    se_slope: f64,
    residual_norm: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<Line> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = rss / (nf - 2.0);
    let se_slope = (s2 / sxx).sqrt();
    let se_intercept = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    Ok(Line {
        intercept,
        slope,
        se_intercept,
        se_slope,
        residual_norm: rss.sqrt(),
    })
}

/// Fits `y = −P⁰ + P¹·L` to `(L, y)` points. Points with `L ≤ 2` are dropped.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(l, _)| l > 2.0).collect();
    if kept.len() < points.len() {
        log::warn!(
            "fit_linear: dropped {} points with L ≤ 2",
            points.len() - kept.len()
        );
    }
    if kept.iter().any(|(l, y)| !l.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    let line = ols(&xs, &ys)?;
    Ok(FitResult {
        model: FitModel::Linear,
        first: -line.intercept,
        second: line.slope,
        first_stderr: line.se_intercept,
        second_stderr: line.se_slope,
        residual_norm: line.residual_norm,
        points: xs.len(),
    })
}

/// Fits `y = c·α^e` by OLS on `(ln α, ln y)`. The multiplier's standard
/// error is propagated to first order, `c·se(ln c)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points
        .iter()
        .any(|&(a, y)| !(a > 0.0 && y > 0.0 && a.is_finite() && y.is_finite()))
    {
        return Err(Error::DegenerateFit(
            "power-law fit needs positive, finite α and y".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = ols(&xs, &ys)?;
    let c = line.intercept.exp();
    Ok(FitResult {
        model: FitModel::PowerLaw,
        first: c,
        second: line.slope,
        first_stderr: c * line.se_intercept,
        second_stderr: line.se_slope,
        residual_norm: line.residual_norm,
        points: points.len(),
    })
}

impl FitResult {
    /// Model value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.model {
            FitModel::Linear => -self.first + self.second * x,
            FitModel::PowerLaw => self.first * x.powf(self.second),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{p_nr, P_NR0, P_NR1};
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (3..10).map(|l| (l as f64, -0.1 + 0.3 * l as f64)).collect();
        let f = fit_linear(&pts).unwrap();
        assert!((f.first - 0.1).abs() < 1e-12);
        assert!((f.second - 0.3).abs() < 1e-12);
        assert!(f.residual_norm < 1e-12);
    }

    #[test]
    fn small_l_points_are_dropped() {
        let mut pts: Vec<_> = (3..8).map(|l| (l as f64, 2.0 * l as f64)).collect();
        pts.push((2.0, 100.0));
        pts.push((1.0, -50.0));
        let f = fit_linear(&pts).unwrap();
        assert_eq!(f.points, 5);
        assert!(f.first.abs() < 1e-12 && (f.second - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_estimator_coefficients() {
        let a = 0.02;
        let pts: Vec<_> = (3..10).map(|l| (l as f64, p_nr(l, a).unwrap())).collect();
        let f = fit_linear(&pts).unwrap();
        assert!((f.first - P_NR0.0 * a.powf(P_NR0.1)).abs() < 1e-10);
        assert!((f.second - P_NR1.0 * a.powf(P_NR1.1)).abs() < 1e-10);
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [0.01, 0.02, 0.04, 0.06, 0.09]
            .iter()
            .map(|&a| (a, 2.0 * a * a * a))
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.first - 2.0).abs() < 1e-10);
        assert!((f.second - 3.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_linear(&[(3.0, 1.0), (3.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(fit_linear(&[(3.0, 1.0), (4.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(0.1, 1.0), (0.2, -1.0), (0.3, 1.0)]).is_err());
        assert!(fit_power_law(&[(0.0, 1.0), (0.2, 1.0), (0.3, 1.0)]).is_err());
    }

    #[test]
    fn standard_errors_on_noisy_line() {
        let pts = [(3.0, 1.0), (4.0, 2.1), (5.0, 2.9), (6.0, 4.2), (7.0, 4.8)];
        let f = fit_linear(&pts).unwrap();
        assert!(f.first_stderr > 0.0 && f.second_stderr > 0.0 && f.residual_norm > 0.0);
    }

    proptest! {
        #[test]
        fn scale_equivariance(s in 1e-3f64..1e3, c in 0.1f64..10.0, e in 0.5f64..3.5) {
            let alphas: [f64; 5] = [0.01, 0.02, 0.04, 0.06, 0.09];
            // Mild deterministic wobble so the fit is not exact.
            let pts: Vec<_> = alphas.iter().enumerate()
                .map(|(i, &a)| (a, c * a.powf(e) * (1.0 + 0.01 * (i as f64 - 2.0))))
                .collect();
            let scaled: Vec<_> = pts.iter().map(|&(a, y)| (a, s * y)).collect();
            let f = fit_power_law(&pts).unwrap();
            let g = fit_power_law(&scaled).unwrap();
            prop_assert!(((g.first / f.first) / s - 1.0).abs() < 1e-12);
            prop_assert!((g.second - f.second).abs() < 1e-12);
        }

        #[test]
        fn fit_of_fit_is_idempotent(c in 0.1f64..10.0, e in 0.5f64..3.5, wobble in 0.0f64..0.05) {
            let alphas: [f64; 5] = [0.01, 0.02, 0.04, 0.06, 0.09];
            let pts: Vec<_> = alphas.iter().enumerate()
                .map(|(i, &a)| (a, c * a.powf(e) * (1.0 + wobble * ((i % 2) as f64 - 0.5))))
                .collect();
            let f = fit_power_law(&pts).unwrap();
            let again: Vec<_> = alphas.iter().map(|&a| (a, f.eval(a))).collect();
            let g = fit_power_law(&again).unwrap();
            prop_assert!((g.first / f.first - 1.0).abs() < 1e-10);
            prop_assert!((g.second - f.second).abs() < 1e-10);
        }
    }
}
