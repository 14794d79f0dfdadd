//! Small statistics helpers: weighted line fits, t intervals, binomial intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Straight-line fit y ≈ intercept + slope·x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub se_intercept: f64,
    pub se_slope: f64,
    pub dof: usize,
    /// χ²/dof for weighted fits, residual variance for unweighted fits.
    pub chi2_red: f64,
    pub slope_ci95: (f64, f64),
    pub intercept_ci95: (f64, f64),
}

impl LineFit {
    pub fn slope_ci_excludes_zero(&self) -> bool {
        self.slope_ci95.0 > 0.0 || self.slope_ci95.1 < 0.0
    }
}

/// Two-sided 95% Student-t quantile; infinite for zero degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY)
}

fn fit_core(x: &[f64], y: &[f64], w: &[f64], known_variance: bool) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n || w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let xbar = sx / sw;
    let ybar = sy / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xbar) * (y[i] - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let dof = n - 2;
    let chi2: f64 = (0..n)
        .map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let chi2_red = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
    let scale = if known_variance { chi2_red.max(1.0) } else { chi2_red };
    let var_slope = scale / sxx;
    let var_intercept = scale * (1.0 / sw + xbar * xbar / sxx);
    let (se_slope, se_intercept) = (var_slope.sqrt(), var_intercept.sqrt());
    let t = t_quantile_975(dof);
    Some(LineFit {
        intercept,
        slope,
        se_intercept,
        se_slope,
        dof,
        chi2_red,
        slope_ci95: (slope - t * se_slope, slope + t * se_slope),
        intercept_ci95: (intercept - t * se_intercept, intercept + t * se_intercept),
    })
}

/// Inverse-variance weighted fit; standard errors are inflated by √χ²_red when the
/// scatter exceeds the stated variances.
pub fn weighted_line_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Option<LineFit> {
    fit_core(x, y, weights, true)
}

/// Ordinary least squares with the residual variance as noise estimate.
pub fn ols_line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    fit_core(x, y, &vec![1.0; x.len()], false)
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (mid - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (mid + half).min(1.0) };
    (lo, hi)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
