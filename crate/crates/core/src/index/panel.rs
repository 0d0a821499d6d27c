use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::hierarchy::check_headers;
use super::period::{parse_date, YearMonth};
use super::IndexError;

/// Date × indicator matrix of search volumes for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    pub region: String,
    pub dates: Vec<NaiveDate>,
    pub indicators: Vec<String>,
    /// `dates.len() x indicators.len()`.
    pub values: Array2<f64>,
    /// First and last date each indicator was actually observed.
    pub coverage: Vec<(NaiveDate, NaiveDate)>,
}

impl SeriesPanel {
    pub fn new(region: impl Into<String>, dates: Vec<NaiveDate>, indicators: Vec<String>, values: Array2<f64>) -> Result<Self, IndexError> {
        let coverage = match (dates.first(), dates.last()) {
            (Some(&a), Some(&b)) => vec![(a, b); indicators.len()],
            _ => Vec::new(),
        };
        let panel = SeriesPanel { region: region.into(), dates, indicators, values, coverage };
        panel.validate()?;
        Ok(panel)
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        if self.dates.is_empty() || self.indicators.is_empty() {
            return Err(IndexError::EmptyPanel);
        }
        if self.values.dim() != (self.dates.len(), self.indicators.len()) || self.coverage.len() != self.indicators.len() {
            return Err(IndexError::Shape(format!(
                "panel {}: {} dates x {} indicators but values are {:?}",
                self.region,
                self.dates.len(),
                self.indicators.len(),
                self.values.dim()
            )));
        }
        if let Some(w) = self.dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(IndexError::Dates(format!("dates not strictly increasing at {}", w[1])));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.indicators {
            if !seen.insert(name) {
                return Err(IndexError::Shape(format!("indicator {name:?} appears twice")));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(IndexError::Shape("non-finite panel value".into()));
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.indicators.iter().position(|i| i == name)
    }

    pub fn column(&self, name: &str) -> Option<ArrayView1<'_, f64>> {
        self.column_index(name).map(|j| self.values.column(j))
    }

    /// Copy with only `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<SeriesPanel, IndexError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| IndexError::UnknownIndicator(n.clone())))
            .collect::<Result<_, _>>()?;
        Ok(SeriesPanel {
            region: self.region.clone(),
            dates: self.dates.clone(),
            indicators: names.to_vec(),
            values: self.values.select(Axis(1), &idx),
            coverage: idx.iter().map(|&j| self.coverage[j]).collect(),
        })
    }

    /// True when indicator `j` was observed over the whole `[start, end]`.
    pub fn covers(&self, j: usize, start: NaiveDate, end: NaiveDate) -> bool {
        let (a, b) = self.coverage[j];
        a <= start && b >= end
    }

    /// Calendar-month means of every column.
    pub fn monthly_means(&self) -> (Vec<YearMonth>, Array2<f64>) {
        let mut months: Vec<YearMonth> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (t, &d) in self.dates.iter().enumerate() {
            let m = YearMonth::of(d);
            if months.last() != Some(&m) {
                months.push(m);
                groups.push(Vec::new());
            }
            groups.last_mut().unwrap().push(t);
        }
        let mut out = Array2::zeros((months.len(), self.indicators.len()));
        for (r, rows) in groups.iter().enumerate() {
            out.row_mut(r).assign(&self.values.select(Axis(0), rows).mean_axis(Axis(0)).expect("non-empty month"));
        }
        (months, out)
    }
}

/// Treatment of interior missing days during ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum GapPolicy {
    #[default]
    Reject,
    /// Linear interpolation across runs of at most `max_gap_days` missing days.
    Interpolate { max_gap_days: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub date: String,
    pub keyword: String,
    pub region: String,
    pub value: f64,
}

/// Reads the long-format panel CSV (`date, keyword, region, value`) into one
/// panel per region on a shared daily grid spanning the file's first to last
/// date.
///
/// Days before a keyword's first or after its last observation are filled
/// with 0 and recorded in `coverage`; interior gaps follow `policy`.
pub fn read_panel_csv<R: Read>(reader: R, policy: GapPolicy) -> Result<BTreeMap<String, SeriesPanel>, IndexError> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_headers(&mut rdr, &["date", "keyword", "region", "value"])?;
    let mut cells: BTreeMap<String, BTreeMap<String, BTreeMap<NaiveDate, f64>>> = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<PanelRow>().enumerate() {
        let row_no = i + 2;
        let row = rec.map_err(|e| IndexError::Csv { row: row_no, message: e.to_string() })?;
        let date = parse_date(&row.date).map_err(|e| IndexError::Csv { row: row_no, message: e.to_string() })?;
        if !row.value.is_finite() || row.value < 0.0 {
            return Err(IndexError::Csv { row: row_no, message: format!("value must be a non-negative number, got {}", row.value) });
        }
        let series = cells.entry(row.region.trim().to_string()).or_default().entry(row.keyword.trim().to_string()).or_default();
        if series.insert(date, row.value).is_some() {
            return Err(IndexError::Csv { row: row_no, message: format!("duplicate value for {} {} {}", row.region, row.keyword, row.date) });
        }
    }
    let all_dates = cells.values().flat_map(|k| k.values()).flat_map(|s| s.keys().copied());
    let (start, end) = match all_dates.fold(None, |acc: Option<(NaiveDate, NaiveDate)>, d| match acc {
        None => Some((d, d)),
        Some((a, b)) => Some((a.min(d), b.max(d))),
    }) {
        Some(range) => range,
        None => return Err(IndexError::EmptyPanel),
    };
    let dates: Vec<NaiveDate> = start.iter_days().take_while(|d| *d <= end).collect();

    let mut panels = BTreeMap::new();
    for (region, keywords) in cells {
        let indicators: Vec<String> = keywords.keys().cloned().collect();
        let mut values = Array2::zeros((dates.len(), indicators.len()));
        let mut coverage = Vec::with_capacity(indicators.len());
        for (j, (keyword, series)) in keywords.iter().enumerate() {
            let first = *series.keys().next().expect("at least one row");
            let last = *series.keys().next_back().expect("at least one row");
            let mut column: Vec<Option<f64>> = dates.iter().map(|d| series.get(d).copied()).collect();
            fill_interior(&mut column, &dates, first, last, policy)
                .map_err(|day| IndexError::Gap { region: region.clone(), keyword: keyword.clone(), date: day })?;
            for (t, v) in column.into_iter().enumerate() {
                values[[t, j]] = v.unwrap_or(0.0);
            }
            coverage.push((first, last));
        }
        let panel = SeriesPanel { region: region.clone(), dates: dates.clone(), indicators, values, coverage };
        panel.validate()?;
        panels.insert(region, panel);
    }
    Ok(panels)
}

/// Fills missing days strictly between `first` and `last`; returns the first
/// offending date when the policy forbids it.
fn fill_interior(column: &mut [Option<f64>], dates: &[NaiveDate], first: NaiveDate, last: NaiveDate, policy: GapPolicy) -> Result<(), NaiveDate> {
    let mut t = 0;
    while t < column.len() {
        if column[t].is_some() || dates[t] < first || dates[t] > last {
            t += 1;
            continue;
        }
        let gap_start = t;
        while t < column.len() && column[t].is_none() {
            t += 1;
        }
        let len = t - gap_start;
        match policy {
            GapPolicy::Interpolate { max_gap_days } if len <= max_gap_days => {
                let left = column[gap_start - 1].expect("observed before gap");
                let right = column[t].expect("observed after gap");
                for (k, cell) in column[gap_start..t].iter_mut().enumerate() {
                    let w = (k + 1) as f64 / (len + 1) as f64;
                    *cell = Some(left + (right - left) * w);
                }
            }
            _ => return Err(dates[gap_start]),
        }
    }
    Ok(())
}
