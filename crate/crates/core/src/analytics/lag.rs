use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use super::AnalyticsError;
use crate::index::YearMonth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagPoint {
    pub lag: usize,
    pub r: f64,
    /// Number of (index, investment) month pairs behind `r`.
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub jan_adjusted: bool,
    pub lags: Vec<LagPoint>,
    /// Lag with the largest `r`; the shortest lag wins ties.
    pub best_lag: usize,
}

/// Replaces each February with the mean of January and February and drops
/// January. A January without its February is dropped too.
pub fn jan_adjust(index: &BTreeMap<YearMonth, f64>) -> BTreeMap<YearMonth, f64> {
    let mut out = BTreeMap::new();
    for (&m, &v) in index {
        match m.month {
            1 => {}
            2 => {
                let jan = YearMonth { year: m.year, month: 1 };
                let merged = index.get(&jan).map_or(v, |j| (j + v) / 2.0);
                out.insert(m, merged);
            }
            _ => {
                out.insert(m, v);
            }
        }
    }
    out
}

/// Correlation between `index` shifted back by 0..=max_lag calendar months and
/// `investment`.
///
/// With `jan_adjust`, the index's January is folded into February and the
/// investment's January rows are ignored, matching a target that reports
/// January and February as one cumulative figure.
pub fn lag_correlation(
    index: &BTreeMap<YearMonth, f64>,
    investment: &BTreeMap<YearMonth, f64>,
    max_lag: usize,
    jan_adjust_on: bool,
) -> Result<LagProfile, AnalyticsError> {
    let index = if jan_adjust_on { jan_adjust(index) } else { index.clone() };
    let needed = max_lag + 3;
    let mut lags = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let (x, y): (Vec<f64>, Vec<f64>) = investment
            .iter()
            .filter(|(m, _)| !(jan_adjust_on && m.month == 1))
            .filter_map(|(m, &inv)| {
                let src = shift_back(*m, lag);
                index.get(&src).map(|&ix| (ix, inv))
            })
            .unzip();
        if x.len() < needed {
            return Err(AnalyticsError::TooShort { needed, got: x.len() });
        }
        lags.push(LagPoint { lag, r: pearson(&x, &y)?, pairs: x.len() });
    }
    let best_lag = lags.iter().fold(&lags[0], |best, p| if p.r > best.r { p } else { best }).lag;
    Ok(LagProfile { jan_adjusted: jan_adjust_on, lags, best_lag })
}

fn shift_back(m: YearMonth, lag: usize) -> YearMonth {
    let ord = m.ordinal() - lag as i64;
    YearMonth { year: ord.div_euclid(12) as i32, month: ord.rem_euclid(12) as u32 + 1 }
}

/// Reads a `month,value` CSV (month as `YYYY-MM`).
pub fn read_monthly_csv<R: Read>(reader: R) -> Result<BTreeMap<YearMonth, f64>, AnalyticsError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| AnalyticsError::Csv { row: 1, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers != ["month", "value"] {
        return Err(AnalyticsError::Csv { row: 1, message: format!("expected header [\"month\", \"value\"], found {headers:?}") });
    }
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| AnalyticsError::Csv { row, message: e.to_string() })?;
        let month: YearMonth = rec[0].parse().map_err(|e: crate::index::IndexError| AnalyticsError::Csv { row, message: e.to_string() })?;
        let value: f64 = rec[1]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| AnalyticsError::Csv { row, message: format!("value: not a finite number: {:?}", &rec[1]) })?;
        if out.insert(month, value).is_some() {
            return Err(AnalyticsError::Csv { row, message: format!("month {month} appears twice") });
        }
    }
    if out.is_empty() {
        return Err(AnalyticsError::Csv { row: 2, message: "no data rows".into() });
    }
    Ok(out)
}
