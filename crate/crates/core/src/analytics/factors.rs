use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::stats::{pearson, standardize};
use super::AnalyticsError;
use crate::index::{IndicatorHierarchy, SeriesPanel, YearMonth};

/// First-principal-component summary of one primary indicator's entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFactor {
    pub primary: String,
    pub indicators: Vec<String>,
    /// Unit-norm eigenvector weights on the standardized members; constant
    /// members get 0.
    pub loadings: Vec<f64>,
    pub explained_variance: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorScores {
    pub months: Vec<YearMonth>,
    pub groups: Vec<GroupFactor>,
}

/// Loadings, scores and explained variance share of the first principal
/// component of the standardized columns of `values` (rows = observations).
///
/// The sign is chosen so the score correlates non-negatively with the
/// row means of `values`.
pub fn factor_scores(values: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Vec<f64>, f64), AnalyticsError> {
    let (n, m) = values.dim();
    if n < 2 {
        return Err(AnalyticsError::TooShort { needed: 2, got: n });
    }
    if m == 0 {
        return Err(AnalyticsError::InvalidArgument("no columns".into()));
    }
    let mut live = Vec::new();
    let mut z = Array2::<f64>::zeros((n, m));
    for j in 0..m {
        match standardize(&values.column(j).to_vec()) {
            Ok(col) => {
                z.column_mut(j).assign(&ndarray::Array1::from(col));
                live.push(j);
            }
            Err(AnalyticsError::ZeroVariance) => {}
            Err(e) => return Err(e),
        }
    }
    if live.is_empty() {
        return Err(AnalyticsError::ZeroVariance);
    }
    let k = live.len();
    let zl = DMatrix::from_fn(n, k, |i, c| z[[i, live[c]]]);
    let corr = (zl.transpose() * &zl) / (n - 1) as f64;
    let eig = SymmetricEigen::new(corr);
    let top = (0..k).fold(0, |best, i| if eig.eigenvalues[i] > eig.eigenvalues[best] { i } else { best });
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let mut scores: Vec<f64> = (0..n).map(|i| (0..k).map(|c| zl[(i, c)] * v[c]).sum()).collect();

    let row_means: Vec<f64> = values.rows().into_iter().map(|r| r.sum() / m as f64).collect();
    let flip = match pearson(&scores, &row_means) {
        Ok(r) => r < 0.0,
        Err(_) => v.iter().sum::<f64>() < 0.0,
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
        scores.iter_mut().for_each(|x| *x = -*x);
    }
    let mut loadings = vec![0.0; m];
    for (c, &j) in live.iter().enumerate() {
        loadings[j] = v[c];
    }
    let explained = eig.eigenvalues[top] / k as f64;
    Ok((loadings, scores, explained))
}

/// Monthly factor score per primary indicator, in hierarchy order. Entries
/// missing from `normalized` (screened out) are skipped.
pub fn group_factor_scores(normalized: &SeriesPanel, hierarchy: &IndicatorHierarchy) -> Result<FactorScores, AnalyticsError> {
    let (months, means) = normalized.monthly_means();
    let mut groups = Vec::new();
    for primary in &hierarchy.primaries {
        let indicators: Vec<String> = primary
            .secondaries
            .iter()
            .flat_map(|s| &s.entries)
            .filter(|e| normalized.column_index(&e.name).is_some())
            .map(|e| e.name.clone())
            .collect();
        if indicators.is_empty() {
            return Err(AnalyticsError::EmptyGroup(primary.name.clone()));
        }
        let idx: Vec<usize> = indicators.iter().map(|n| normalized.column_index(n).expect("filtered above")).collect();
        let block = means.select(ndarray::Axis(1), &idx);
        let (loadings, scores, explained_variance) = factor_scores(block.view()).map_err(|e| match e {
            AnalyticsError::ZeroVariance => {
                AnalyticsError::InvalidArgument(format!("every entry of primary {:?} is constant", primary.name))
            }
            other => other,
        })?;
        groups.push(GroupFactor { primary: primary.name.clone(), indicators, loadings, explained_variance, scores });
    }
    Ok(FactorScores { months, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_column_is_standardized() {
        let x = array![[1.0], [3.0], [2.0], [6.0]];
        let (l, s, e) = factor_scores(x.view()).unwrap();
        assert_eq!(l, vec![1.0]);
        let z = standardize(&[1.0, 3.0, 2.0, 6.0]).unwrap();
        for (a, b) in s.iter().zip(z) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfectly_correlated_pair() {
        let x = array![[1.0, 10.0], [2.0, 30.0], [4.0, 70.0], [3.0, 50.0]];
        let (l, s, e) = factor_scores(x.view()).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((l[0] - h).abs() < 1e-12 && (l[1] - h).abs() < 1e-12);
        let z = standardize(&[1.0, 2.0, 4.0, 3.0]).unwrap();
        for (a, b) in s.iter().zip(z) {
            assert!((a - 2f64.sqrt() * b).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_follows_group_mean() {
        let x = array![[1.0, 5.0], [2.0, 4.0], [3.0, 3.5], [4.0, 1.0]];
        let (_, s, _) = factor_scores(x.view()).unwrap();
        let means: Vec<f64> = x.rows().into_iter().map(|r| r.sum() / 2.0).collect();
        assert!(pearson(&s, &means).unwrap() >= 0.0);
    }

    #[test]
    fn constant_members_get_zero_loading() {
        let x = array![[1.0, 7.0], [2.0, 7.0], [0.5, 7.0]];
        let (l, _, _) = factor_scores(x.view()).unwrap();
        assert_eq!(l[1], 0.0);
        assert!(matches!(factor_scores(array![[1.0], [1.0]].view()), Err(AnalyticsError::ZeroVariance)));
    }
}
