//! Polarity normalization, entropy weights and composite index aggregation.

mod hierarchy;
mod normalize;
mod panel;
mod period;
mod region;
mod series;
mod weights;

pub use hierarchy::{Entry, HierarchyRow, IndicatorHierarchy, Polarity, Primary, Provenance, Secondary};
pub use normalize::{normalize, normalize_with_stats, ColumnStats, Normalized};
pub use panel::{read_panel_csv, GapPolicy, PanelRow, SeriesPanel};
pub use period::{parse_date, Frequency, Period, YearMonth};
pub use region::region_indices;
pub use series::{aggregate, composite_index, dimension_index, read_index_csv, write_index_csv, IndexPoint, IndexSeries};
pub use weights::{entropy_weights, WeightVector};

use chrono::NaiveDate;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("unknown polarity {0:?} (expected positive, negative or two_way)")]
    UnknownPolarity(String),
    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("empty panel")]
    EmptyPanel,
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Dates(String),
    #[error("{region}/{keyword}: missing value on {date}")]
    Gap { region: String, keyword: String, date: NaiveDate },
    #[error("unknown indicator {0:?}")]
    UnknownIndicator(String),
    #[error("unknown primary indicator {0:?}")]
    UnknownPrimary(String),
    #[error("region {region}: indicator mismatch: {message}")]
    IndicatorMismatch { region: String, message: String },
    #[error("{0}")]
    Frequency(String),
    #[error(transparent)]
    CsvWrite(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
