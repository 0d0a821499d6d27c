use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::hierarchy::IndicatorHierarchy;
use super::panel::SeriesPanel;
use super::period::{parse_date, Frequency, Period, YearMonth};
use super::weights::WeightVector;
use super::IndexError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexPoint {
    pub period: Period,
    pub value: f64,
    /// The period is only partly covered by the source data.
    pub partial: bool,
}

/// Dated index values at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub frequency: Frequency,
    pub points: Vec<IndexPoint>,
}

impl IndexSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn periods(&self) -> Vec<Period> {
        self.points.iter().map(|p| p.period).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Monthly values keyed by month; `None` for other frequencies.
    pub fn monthly_map(&self) -> Option<BTreeMap<YearMonth, f64>> {
        self.points
            .iter()
            .map(|p| match p.period {
                Period::Month(m) => Some((m, p.value)),
                _ => None,
            })
            .collect()
    }
}

/// Weighted sum of the normalized columns for every date.
pub fn composite_index(normalized: &SeriesPanel, weights: &WeightVector) -> Result<IndexSeries, IndexError> {
    if normalized.indicators != weights.indicators {
        return Err(IndexError::IndicatorMismatch {
            region: normalized.region.clone(),
            message: "weights do not cover exactly the panel's indicators".into(),
        });
    }
    let w = ndarray::Array1::from(weights.weights.clone());
    let values = normalized.values.dot(&w);
    let points = normalized
        .dates
        .iter()
        .zip(values)
        .map(|(&d, v)| IndexPoint { period: Period::Day(d), value: v.clamp(0.0, 1.0), partial: false })
        .collect();
    Ok(IndexSeries { frequency: Frequency::Daily, points })
}

/// Composite over one primary indicator's entries with weights renormalized
/// to sum to one.
pub fn dimension_index(
    normalized: &SeriesPanel,
    hierarchy: &IndicatorHierarchy,
    primary: &str,
    weights: &WeightVector,
) -> Result<IndexSeries, IndexError> {
    let entries = hierarchy.primary_entries(primary).ok_or_else(|| IndexError::UnknownPrimary(primary.to_string()))?;
    let names: Vec<String> = entries.iter().map(|e| e.name.clone()).collect();
    let sub = normalized.select(&names)?;
    composite_index(&sub, &weights.renormalized(&names)?)
}

/// Calendar means at a coarser frequency. Periods not fully covered by the
/// source, or containing partial source points, are flagged partial.
pub fn aggregate(series: &IndexSeries, target: Frequency) -> Result<IndexSeries, IndexError> {
    if target <= series.frequency {
        return Err(IndexError::Frequency(format!("cannot aggregate {:?} to {target:?}", series.frequency)));
    }
    let mut groups: Vec<(Period, f64, usize, bool)> = Vec::new();
    for p in &series.points {
        let key = p.period.coarsen(target).expect("target is coarser");
        match groups.last_mut() {
            Some(g) if g.0 == key => {
                g.1 += p.value;
                g.2 += 1;
                g.3 |= p.partial;
            }
            _ => groups.push((key, p.value, 1, p.partial)),
        }
    }
    let points = groups
        .into_iter()
        .map(|(period, sum, count, partial)| IndexPoint {
            period,
            value: sum / count as f64,
            partial: partial || count < period.full_size(series.frequency),
        })
        .collect();
    Ok(IndexSeries { frequency: target, points })
}

/// Writes `period,<name>...,partial`. All series must share their periods;
/// `partial` is set when any series flags the row.
pub fn write_index_csv<W: Write>(writer: W, columns: &[(String, &IndexSeries)]) -> Result<(), IndexError> {
    let Some((_, first)) = columns.first() else {
        return Err(IndexError::Shape("no series to write".into()));
    };
    let periods = first.periods();
    if let Some((name, _)) = columns.iter().find(|(_, s)| s.periods() != periods) {
        return Err(IndexError::Shape(format!("series {name:?} has different periods")));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["period".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.clone()));
    header.push("partial".into());
    w.write_record(&header)?;
    for (t, period) in periods.iter().enumerate() {
        let mut rec = vec![period.to_string()];
        rec.extend(columns.iter().map(|(_, s)| s.points[t].value.to_string()));
        rec.push(columns.iter().any(|(_, s)| s.points[t].partial).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_index_csv`].
pub fn read_index_csv<R: Read>(reader: R, frequency: Frequency) -> Result<Vec<(String, IndexSeries)>, IndexError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| IndexError::Csv { row: 1, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let has_partial = headers.last().map(String::as_str) == Some("partial");
    let names: Vec<String> = headers.iter().skip(1).take(headers.len() - 1 - usize::from(has_partial)).cloned().collect();
    if headers.first().map(String::as_str) != Some("period") || names.is_empty() {
        return Err(IndexError::Csv { row: 1, message: format!("expected period,<series>... header, found {headers:?}") });
    }
    let mut out: Vec<(String, IndexSeries)> =
        names.iter().map(|n| (n.clone(), IndexSeries { frequency, points: Vec::new() })).collect();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| IndexError::Csv { row, message: e.to_string() })?;
        let bad = |message: String| IndexError::Csv { row, message };
        let label = rec.get(0).unwrap_or_default();
        let period = parse_period(label, frequency).map_err(|e| bad(e.to_string()))?;
        let partial = if has_partial {
            rec.get(headers.len() - 1).unwrap_or_default().trim().parse::<bool>().map_err(|e| bad(format!("partial: {e}")))?
        } else {
            false
        };
        for (j, (name, series)) in out.iter_mut().enumerate() {
            let cell = rec.get(j + 1).unwrap_or_default().trim();
            let value: f64 = cell.parse().map_err(|_| bad(format!("column {name:?}: not a number: {cell:?}")))?;
            if let Some(prev) = series.points.last() {
                if prev.period >= period {
                    return Err(bad(format!("period {label} is not after {}", prev.period)));
                }
            }
            series.points.push(IndexPoint { period, value, partial });
        }
    }
    Ok(out)
}

fn parse_period(s: &str, frequency: Frequency) -> Result<Period, IndexError> {
    Ok(match frequency {
        Frequency::Daily => Period::Day(parse_date(s)?),
        Frequency::Monthly => Period::Month(s.parse()?),
        Frequency::Annual => Period::Year(s.trim().parse().map_err(|_| IndexError::Parse(format!("expected a year, got {s:?}")))?),
    })
}
