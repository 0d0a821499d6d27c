use std::collections::BTreeMap;

use rayon::prelude::*;

use super::normalize::{normalize_with_stats, ColumnStats};
use super::panel::SeriesPanel;
use super::period::Frequency;
use super::series::{aggregate, composite_index, IndexSeries};
use super::weights::WeightVector;
use super::IndexError;

/// Annual index per region on the national scale: every region is normalized
/// with the national column statistics and weighted with the national weights.
pub fn region_indices(
    panels: &BTreeMap<String, SeriesPanel>,
    weights: &WeightVector,
    stats: &[ColumnStats],
) -> Result<BTreeMap<String, IndexSeries>, IndexError> {
    panels
        .par_iter()
        .map(|(region, panel)| {
            if panel.indicators != weights.indicators {
                return Err(IndexError::IndicatorMismatch {
                    region: region.clone(),
                    message: format!("expected indicators {:?}, found {:?}", weights.indicators, panel.indicators),
                });
            }
            let normalized = normalize_with_stats(panel, stats)?;
            let daily = composite_index(&normalized, weights)?;
            Ok((region.clone(), aggregate(&daily, Frequency::Annual)?))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::hierarchy::Polarity;
    use crate::index::normalize::normalize;
    use crate::index::weights::entropy_weights;
    use chrono::NaiveDate;
    use ndarray::Array2;

    fn panel(region: &str, values: Array2<f64>) -> SeriesPanel {
        let dates = NaiveDate::from_ymd_opt(2020, 12, 1).unwrap().iter_days().take(values.nrows()).collect();
        SeriesPanel::new(region, dates, vec!["a".into(), "b".into()], values).unwrap()
    }

    #[test]
    fn shared_scale_across_regions() {
        let national = panel("national", Array2::from_shape_fn((60, 2), |(t, j)| ((t * (j + 3)) % 17) as f64 + 1.0));
        let pol = [("a".to_string(), Polarity::Positive), ("b".to_string(), Polarity::Positive)].into_iter().collect();
        let norm = normalize(&national, &pol).unwrap();
        let w = entropy_weights(norm.panel.values.view(), &national.indicators).unwrap();

        let low = panel("low", national.values.mapv(|v| v * 0.5));
        let mut panels = BTreeMap::new();
        for p in [national.clone(), low, panel("copy", national.values.clone())] {
            panels.insert(p.region.clone(), p);
        }
        let out = region_indices(&panels, &w, &norm.stats).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out["national"], out["copy"]);
        for (a, b) in out["low"].points.iter().zip(&out["national"].points) {
            assert!(a.value <= b.value);
        }
        assert!(out.values().flat_map(|s| &s.points).all(|p| (0.0..=1.0).contains(&p.value)));
        assert_eq!(out["national"].len(), 2);

        let mut bad = panels.clone();
        let mut odd = national.clone();
        odd.indicators = vec!["a".into(), "z".into()];
        bad.insert("odd".into(), odd);
        match region_indices(&bad, &w, &norm.stats) {
            Err(IndexError::IndicatorMismatch { region, .. }) => assert_eq!(region, "odd"),
            other => panic!("{other:?}"),
        }
    }
}
