//! Index and analytics results checked against independent reference code.

use std::collections::BTreeMap;

use aif_core::analytics::{
    f_cdf, f_pvalue, factor_scores, jan_adjust, lag_correlation, ols_regress, regularized_incomplete_beta, standardize,
};
use aif_core::index::{entropy_weights, normalize, Polarity, SeriesPanel, YearMonth};
use approx::assert_abs_diff_eq;
use chrono::NaiveDate;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

/// Entropy weights cell by cell, the way a spreadsheet would lay them out.
fn entropy_oracle(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let m = rows[0].len();
    let mut d = Vec::new();
    for j in 0..m {
        let mut col_sum = 0.0;
        for row in rows {
            col_sum += row[j];
        }
        let mut e = 0.0;
        if col_sum == 0.0 {
            e = 1.0;
        } else {
            for row in rows {
                let p = row[j] / col_sum;
                if p > 0.0 {
                    e -= p * p.ln() / (n as f64).ln();
                }
            }
        }
        d.push(1.0 - e);
    }
    let total: f64 = d.iter().sum();
    if total.abs() < 1e-15 {
        return vec![1.0 / m as f64; m];
    }
    d.iter().map(|x| x / total).collect()
}

fn names(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("c{j}")).collect()
}

#[test]
fn entropy_worked_panel() {
    let rows = vec![vec![0.2, 0.9], vec![0.4, 0.1], vec![0.9, 0.5]];
    let arr = Array2::from_shape_fn((3, 2), |(i, j)| rows[i][j]);
    let w = entropy_weights(arr.view(), &names(2)).unwrap();
    for (a, b) in w.weights.iter().zip(entropy_oracle(&rows)) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
    }
}

#[test]
fn entropy_random_panels() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.random_range(2..=20);
        let m = rng.random_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let arr = Array2::from_shape_fn((n, m), |(i, j)| rows[i][j]);
        let w = entropy_weights(arr.view(), &names(m)).unwrap();
        assert_abs_diff_eq!(w.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        for (a, b) in w.weights.iter().zip(entropy_oracle(&rows)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }
}

fn panel_from(values: Array2<f64>) -> SeriesPanel {
    let dates = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().iter_days().take(values.nrows()).collect();
    SeriesPanel::new("national", dates, names(values.ncols()), values).unwrap()
}

proptest! {
    #[test]
    fn weights_survive_affine_rescaling(
        raw in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 4..15),
        col in 0usize..3,
        a in 0.5f64..20.0,
        b in 0.0f64..50.0,
    ) {
        let n = raw.len();
        let base = Array2::from_shape_fn((n, 3), |(i, j)| raw[i][j]);
        let mut scaled = base.clone();
        scaled.column_mut(col).mapv_inplace(|x| a * x + b);
        let pol: BTreeMap<String, Polarity> = names(3).into_iter().zip([Polarity::Positive, Polarity::Negative, Polarity::TwoWay]).collect();
        let w1 = entropy_weights(normalize(&panel_from(base), &pol).unwrap().panel.values.view(), &names(3)).unwrap();
        let w2 = entropy_weights(normalize(&panel_from(scaled), &pol).unwrap().panel.values.view(), &names(3)).unwrap();
        for (x, y) in w1.weights.iter().zip(&w2.weights) {
            prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", w1.weights, w2.weights);
        }
    }
}

/// Leading eigenvector of a symmetric matrix by power iteration.
fn power_iteration(m: &[Vec<f64>]) -> Vec<f64> {
    let k = m.len();
    let mut v = vec![1.0; k];
    for _ in 0..5000 {
        let mut w: Vec<f64> = (0..k).map(|i| (0..k).map(|j| m[i][j] * v[j]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
    }
    v
}

#[test]
fn factor_scores_match_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let n = 30;
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|j| base.iter().map(|b| b * (j as f64 + 1.0) + rng.random_range(-0.7..0.7)).collect())
            .collect();
        let arr = Array2::from_shape_fn((n, 3), |(i, j)| cols[j][i]);
        let (loadings, scores, _) = factor_scores(arr.view()).unwrap();

        let z: Vec<Vec<f64>> = cols.iter().map(|c| standardize(c).unwrap()).collect();
        let corr: Vec<Vec<f64>> = (0..3)
            .map(|a| (0..3).map(|b| (0..n).map(|i| z[a][i] * z[b][i]).sum::<f64>() / (n - 1) as f64).collect())
            .collect();
        let mut v = power_iteration(&corr);
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let sign = if loadings.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in loadings.iter().zip(&v) {
            assert_abs_diff_eq!(*a, sign * b, epsilon = 1e-8);
        }
        for i in 0..n {
            let s: f64 = (0..3).map(|j| z[j][i] * v[j]).sum();
            assert_abs_diff_eq!(scores[i], sign * s, epsilon = 1e-8);
        }
    }
}

/// Least squares by Gauss-Jordan elimination on the normal equations.
fn normal_equations(y: &[f64], x: &[Vec<f64>]) -> Vec<f64> {
    let n = y.len();
    let p = x.len() + 1;
    let col = |j: usize, i: usize| if j == 0 { 1.0 } else { x[j - 1][i] };
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let mut row: Vec<f64> = (0..p).map(|c| (0..n).map(|i| col(r, i) * col(c, i)).sum()).collect();
            row.push((0..n).map(|i| col(r, i) * y[i]).sum());
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|r| a[r][p] / a[r][r]).collect()
}

#[test]
fn regression_matches_normal_equations_and_statrs() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 54;
    let x: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.3 + 0.4 * x[0][i] - 0.2 * x[3][i] + rng.random_range(-1.0..1.0)).collect();
    let rep = ols_regress(&y, &x).unwrap();
    let beta = normal_equations(&y, &x);
    assert_abs_diff_eq!(rep.intercept, beta[0], epsilon = 1e-9);
    for (a, b) in rep.coefficients.iter().zip(&beta[1..]) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
    }
    assert_abs_diff_eq!(rep.adj_r_squared, 1.0 - (1.0 - rep.r_squared) * 53.0 / 48.0, epsilon = 1e-9);
    assert_abs_diff_eq!(rep.f_statistic, (rep.r_squared / 5.0) / ((1.0 - rep.r_squared) / 48.0), epsilon = 1e-9);
    let oracle = FisherSnedecor::new(5.0, 48.0).unwrap();
    assert_abs_diff_eq!(rep.p_value, oracle.sf(rep.f_statistic), epsilon = 1e-9);
}

#[test]
fn f_distribution_against_statrs() {
    for &(k, n) in &[(1usize, 10usize), (5, 54), (3, 200), (10, 15)] {
        let oracle = FisherSnedecor::new(k as f64, (n - k - 1) as f64).unwrap();
        let mut prev = 1.0;
        for i in 1..60 {
            let f = i as f64 * 0.15;
            let p = f_pvalue(f, k, n).unwrap();
            assert_abs_diff_eq!(p, oracle.sf(f), epsilon = 1e-9);
            assert_abs_diff_eq!(p + f_cdf(f, k, n).unwrap(), 1.0, epsilon = 1e-9);
            assert!(p < prev);
            prev = p;
        }
    }
    for &(a, b, x) in &[(0.5, 0.5, 0.3), (2.5, 24.0, 0.2), (30.0, 4.0, 0.9), (100.0, 100.0, 0.5)] {
        let via_f = regularized_incomplete_beta(a, b, x).unwrap();
        // I_x(a,b) = P(F <= f) with d1 = 2a, d2 = 2b and x = d1 f / (d1 f + d2).
        let f = x * 2.0 * b / ((1.0 - x) * 2.0 * a);
        let oracle = FisherSnedecor::new(2.0 * a, 2.0 * b).unwrap().cdf(f);
        assert_abs_diff_eq!(via_f, oracle, epsilon = 1e-9);
    }
}

fn ym(y: i32, m: u32) -> YearMonth {
    YearMonth::new(y, m).unwrap()
}

#[test]
fn planted_lag_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let months: Vec<YearMonth> = (0..48).map(|i| ym(2017 + i / 12, (i % 12) as u32 + 1)).collect();
    let index: BTreeMap<YearMonth, f64> = months.iter().map(|&m| (m, rng.random_range(0.0..1.0))).collect();
    let investment: BTreeMap<YearMonth, f64> = months[3..].iter().zip(&months).map(|(&t, s)| (t, index[s])).collect();
    let profile = lag_correlation(&index, &investment, 5, false).unwrap();
    assert_eq!(profile.lags.len(), 6);
    assert_eq!(profile.best_lag, 3);
    assert!(profile.lags[3].r > 0.999);

    // Same construction on the adjusted index, evaluated with the adjustment.
    let adjusted = jan_adjust(&index);
    let investment: BTreeMap<YearMonth, f64> = months[3..]
        .iter()
        .zip(&months)
        .filter(|(t, s)| t.month != 1 && adjusted.contains_key(s))
        .map(|(&t, s)| (t, adjusted[s]))
        .collect();
    let profile = lag_correlation(&index, &investment, 5, true).unwrap();
    assert_eq!(profile.best_lag, 3);
    assert!(profile.lags[3].r > 0.999);
}

#[test]
fn january_adjustment_on_fourteen_months() {
    // 2020-01 .. 2021-02 with index value = month number within the run.
    let index: BTreeMap<YearMonth, f64> = (0..14).map(|i| (ym(2020 + i / 12, (i % 12) as u32 + 1), (i + 1) as f64)).collect();
    let adj = jan_adjust(&index);
    assert_eq!(adj.len(), 12);
    assert!(!adj.contains_key(&ym(2020, 1)) && !adj.contains_key(&ym(2021, 1)));
    assert_eq!(adj[&ym(2020, 2)], 1.5);
    assert_eq!(adj[&ym(2021, 2)], 13.5);
    assert_eq!(adj[&ym(2020, 3)], 3.0);

    // Investment with a January row: it is ignored under the adjustment.
    let mut investment: BTreeMap<YearMonth, f64> = adj.iter().map(|(m, v)| (*m, 2.0 * v + 1.0)).collect();
    investment.insert(ym(2021, 1), -1000.0);
    let p = lag_correlation(&index, &investment, 0, true).unwrap();
    assert_abs_diff_eq!(p.lags[0].r, 1.0, epsilon = 1e-12);
    assert_eq!(p.lags[0].pairs, 12);
    assert!(lag_correlation(&index, &investment, 0, false).unwrap().lags[0].r < 0.9);
}
