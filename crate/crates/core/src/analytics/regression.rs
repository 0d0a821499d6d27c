use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::f_pvalue;
use super::AnalyticsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub k: usize,
}

pub fn adjusted_r_squared(r_squared: f64, n: usize, k: usize) -> f64 {
    1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - k - 1) as f64
}

/// Overall-significance F statistic of a regression with `k` regressors.
pub fn f_statistic(r_squared: f64, n: usize, k: usize) -> f64 {
    (r_squared / k as f64) / ((1.0 - r_squared) / (n - k - 1) as f64)
}

/// Least squares of `y` on the columns of `x` plus an intercept.
pub fn ols_regress(y: &[f64], x: &[Vec<f64>]) -> Result<RegressionReport, AnalyticsError> {
    let n = y.len();
    let k = x.len();
    if k == 0 {
        return Err(AnalyticsError::InvalidArgument("no regressors".into()));
    }
    if let Some(col) = x.iter().find(|c| c.len() != n) {
        return Err(AnalyticsError::LengthMismatch(col.len(), n));
    }
    if n < k + 2 {
        return Err(AnalyticsError::TooShort { needed: k + 2, got: n });
    }
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { x[j - 1][i] });
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..=k).map(|j| design.column(j).norm()).fold(0.0, f64::max);
    if (0..=k).any(|j| r[(j, j)].abs() <= 1e-10 * scale) {
        return Err(AnalyticsError::RankDeficient);
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r.solve_upper_triangular(&qty).ok_or(AnalyticsError::RankDeficient)?;

    let fitted = &design * &beta;
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst <= 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let sse: f64 = (&yv - fitted).iter().map(|e| e * e).sum();
    let r_squared = (1.0 - sse / sst).clamp(0.0, 1.0);
    let f = f_statistic(r_squared, n, k);
    Ok(RegressionReport {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        r_squared,
        adj_r_squared: adjusted_r_squared(r_squared, n, k),
        f_statistic: f,
        p_value: f_pvalue(f, k, n)?,
        n,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..10).map(|i| ((i * i) % 7) as f64).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 1.5 + 2.0 * a - 0.5 * b).collect();
        let rep = ols_regress(&y, &[x1, x2]).unwrap();
        assert!((rep.r_squared - 1.0).abs() < 1e-12);
        assert!((rep.intercept - 1.5).abs() < 1e-10);
        assert!((rep.coefficients[0] - 2.0).abs() < 1e-10 && (rep.coefficients[1] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn collinear_design_is_rank_deficient() {
        let x1: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let x2: Vec<f64> = x1.iter().map(|v| 3.0 * v + 1.0).collect();
        let y: Vec<f64> = (0..8).map(|i| ((i * 5) % 3) as f64).collect();
        assert!(matches!(ols_regress(&y, &[x1, x2]), Err(AnalyticsError::RankDeficient)));
    }

    #[test]
    fn closed_forms() {
        assert!((adjusted_r_squared(0.204, 54, 5) - (1.0 - 0.796 * 53.0 / 48.0)).abs() < 1e-15);
        assert!((f_statistic(0.204, 54, 5) - 0.0408 / (0.796 / 48.0)).abs() < 1e-12);
    }

    #[test]
    fn matches_normal_equations() {
        let x1: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos() + 0.2 * i as f64).collect();
        let rep = ols_regress(&y, std::slice::from_ref(&x1)).unwrap();
        // Simple regression: slope = cov/var.
        let mx = x1.iter().sum::<f64>() / 12.0;
        let my = y.iter().sum::<f64>() / 12.0;
        let sxy: f64 = x1.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x1.iter().map(|a| (a - mx).powi(2)).sum();
        assert!((rep.coefficients[0] - sxy / sxx).abs() < 1e-12);
        assert!((rep.intercept - (my - sxy / sxx * mx)).abs() < 1e-12);
    }
}
