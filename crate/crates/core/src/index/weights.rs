use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::IndexError;

/// Indicator weights in panel column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub indicators: Vec<String>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.indicators.iter().position(|i| i == name).map(|j| self.weights[j])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights of `names`, rescaled to sum to one. A subset whose weights are
    /// all zero gets equal weights.
    pub fn renormalized(&self, names: &[String]) -> Result<WeightVector, IndexError> {
        let raw: Vec<f64> = names
            .iter()
            .map(|n| self.get(n).ok_or_else(|| IndexError::UnknownIndicator(n.clone())))
            .collect::<Result<_, _>>()?;
        if raw.is_empty() {
            return Err(IndexError::EmptyPanel);
        }
        let total: f64 = raw.iter().sum();
        let weights = if total > 0.0 {
            raw.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / raw.len() as f64; raw.len()]
        };
        Ok(WeightVector { indicators: names.to_vec(), weights })
    }
}

/// Entropy weights of a normalized panel (`rows = observations`).
///
/// Columns summing to zero count as maximally uninformative (`e_j = 1`).
pub fn entropy_weights(values: ArrayView2<'_, f64>, indicators: &[String]) -> Result<WeightVector, IndexError> {
    let (n, m) = values.dim();
    if m == 0 || m != indicators.len() {
        return Err(IndexError::Shape(format!("{m} columns for {} indicators", indicators.len())));
    }
    if n < 2 {
        return Err(IndexError::Shape(format!("entropy weights need at least 2 rows, got {n}")));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(IndexError::Shape("entropy weights expect values in [0,1]".into()));
    }
    let k = 1.0 / (n as f64).ln();
    let d: Vec<f64> = values
        .columns()
        .into_iter()
        .map(|col| {
            let total = col.sum();
            if total <= 0.0 {
                return 0.0;
            }
            let h: f64 = col
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| {
                    let p = x / total;
                    p * p.ln()
                })
                .sum();
            // Rounding can push e a hair above 1 for near-uniform columns.
            (1.0 + k * h).max(0.0)
        })
        .collect();
    let total: f64 = d.iter().sum();
    let weights = if total > 0.0 {
        d.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / m as f64; m]
    };
    Ok(WeightVector { indicators: indicators.to_vec(), weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("c{j}")).collect()
    }

    #[test]
    fn symmetric_and_degenerate_columns() {
        let w = entropy_weights(array![[0.1, 0.1], [0.7, 0.7], [0.3, 0.3]].view(), &names(2)).unwrap();
        assert!((w.weights[0] - 0.5).abs() < 1e-12);
        let w = entropy_weights(array![[0.4, 0.1], [0.4, 0.9], [0.4, 0.5]].view(), &names(2)).unwrap();
        assert!(w.weights[0].abs() < 1e-12);
        assert!((w.weights[1] - 1.0).abs() < 1e-12);
        let w = entropy_weights(array![[0.0, 0.3], [0.0, 0.9]].view(), &names(2)).unwrap();
        assert_eq!(w.weights[0], 0.0);
        let w = entropy_weights(Array2::from_elem((4, 3), 0.5).view(), &names(3)).unwrap();
        assert_eq!(w.weights, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(entropy_weights(array![[0.5]].view(), &names(1)).is_err());
        assert!(entropy_weights(array![[0.5], [1.5]].view(), &names(1)).is_err());
        assert!(entropy_weights(array![[0.5], [0.5]].view(), &names(2)).is_err());
    }

    #[test]
    fn renormalized_subset() {
        let w = WeightVector { indicators: names(3), weights: vec![0.2, 0.3, 0.5] };
        let r = w.renormalized(&["c0".into(), "c2".into()]).unwrap();
        assert!((r.weights[0] - 0.2 / 0.7).abs() < 1e-15);
        assert!(w.renormalized(&["zz".into()]).is_err());
    }
}
