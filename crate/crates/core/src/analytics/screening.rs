use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::stats::pearson;
use super::AnalyticsError;
use crate::index::{SeriesPanel, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    None,
    LowCorrelation,
    ShortHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRow {
    pub indicator: String,
    /// `None` when the monthly series is constant over the aligned months.
    pub r: Option<f64>,
    pub kept: bool,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub threshold: f64,
    pub months: usize,
    pub rows: Vec<ScreeningRow>,
}

impl ScreeningReport {
    pub fn kept_indicators(&self) -> Vec<String> {
        self.rows.iter().filter(|r| r.kept).map(|r| r.indicator.clone()).collect()
    }
}

/// Correlates each indicator's calendar-month mean with `target` over the
/// months both cover, keeping indicators observed over all of `span` whose
/// `|r| >= threshold`. History is checked before correlation.
pub fn screen_indicators(
    panel: &SeriesPanel,
    target: &BTreeMap<YearMonth, f64>,
    threshold: f64,
    span: (NaiveDate, NaiveDate),
) -> Result<ScreeningReport, AnalyticsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AnalyticsError::InvalidArgument(format!("threshold {threshold} outside [0, 1]")));
    }
    let (months, means) = panel.monthly_means();
    let rows_idx: Vec<usize> = months.iter().enumerate().filter(|(_, m)| target.contains_key(m)).map(|(i, _)| i).collect();
    if rows_idx.len() < 3 {
        return Err(AnalyticsError::Alignment(format!(
            "panel {} and target share {} months; at least 3 are needed",
            panel.region,
            rows_idx.len()
        )));
    }
    let y: Vec<f64> = rows_idx.iter().map(|&i| target[&months[i]]).collect();
    let mut rows = Vec::with_capacity(panel.indicators.len());
    for (j, name) in panel.indicators.iter().enumerate() {
        let x: Vec<f64> = rows_idx.iter().map(|&i| means[[i, j]]).collect();
        let r = match pearson(&x, &y) {
            Ok(r) => Some(r),
            Err(AnalyticsError::ZeroVariance) if y.iter().any(|v| *v != y[0]) => None,
            Err(e) => return Err(e),
        };
        let reason = if !panel.covers(j, span.0, span.1) {
            RemovalReason::ShortHistory
        } else if r.is_none_or(|r| r.abs() < threshold) {
            RemovalReason::LowCorrelation
        } else {
            RemovalReason::None
        };
        rows.push(ScreeningRow { indicator: name.clone(), r, kept: reason == RemovalReason::None, reason });
    }
    Ok(ScreeningReport { threshold, months: rows_idx.len(), rows })
}
