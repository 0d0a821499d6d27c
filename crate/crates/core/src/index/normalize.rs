use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::hierarchy::Polarity;
use super::panel::SeriesPanel;
use super::IndexError;

/// Per-column statistics that drive min-max normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    /// Lower median: the `⌈n/2⌉`-th smallest sample, so it is always attained.
    pub median: f64,
    pub polarity: Polarity,
}

impl ColumnStats {
    pub fn of(column: ArrayView1<'_, f64>, polarity: Polarity) -> Result<Self, IndexError> {
        if column.is_empty() {
            return Err(IndexError::EmptyPanel);
        }
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(ColumnStats {
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            median: sorted[(sorted.len() - 1) / 2],
            polarity,
        })
    }

    /// Maps a raw value into [0,1]. Values outside `[min, max]` (possible when
    /// the stats come from another panel) are clamped.
    pub fn apply(&self, x: f64) -> f64 {
        let ColumnStats { min, max, median, polarity } = *self;
        if max <= min {
            return 0.5;
        }
        let v = match polarity {
            Polarity::Positive => (x - min) / (max - min),
            Polarity::Negative => (max - x) / (max - min),
            Polarity::TwoWay => {
                if x == median {
                    1.0
                } else if x < median {
                    (x - min) / (median - min)
                } else {
                    (max - x) / (max - median)
                }
            }
        };
        v.clamp(0.0, 1.0)
    }
}

/// Normalized panel together with the statistics used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub panel: SeriesPanel,
    pub stats: Vec<ColumnStats>,
}

/// Polarity-aware min-max normalization of every column.
///
/// Two-way columns peak at 1 on their median sample(s) and fall to 0 at both
/// extremes. Constant columns map to 0.5.
pub fn normalize(panel: &SeriesPanel, polarities: &BTreeMap<String, Polarity>) -> Result<Normalized, IndexError> {
    panel.validate()?;
    let stats = panel
        .indicators
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let polarity = *polarities.get(name).ok_or_else(|| IndexError::UnknownIndicator(name.clone()))?;
            ColumnStats::of(panel.values.column(j), polarity)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panel = normalize_with_stats(panel, &stats)?;
    Ok(Normalized { panel, stats })
}

/// Normalizes `panel` column by column using externally supplied statistics.
pub fn normalize_with_stats(panel: &SeriesPanel, stats: &[ColumnStats]) -> Result<SeriesPanel, IndexError> {
    if stats.len() != panel.indicators.len() {
        return Err(IndexError::Shape(format!(
            "{} column statistics for {} indicators",
            stats.len(),
            panel.indicators.len()
        )));
    }
    let (rows, cols) = panel.values.dim();
    let values = Array2::from_shape_fn((rows, cols), |(t, j)| stats[j].apply(panel.values[[t, j]]));
    Ok(SeriesPanel { values, ..panel.clone() })
}
