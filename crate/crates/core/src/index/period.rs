use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::IndexError;

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, IndexError> {
        if !(1..=12).contains(&month) {
            return Err(IndexError::Parse(format!("month {month} outside 1..=12")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth { year: date.year(), month: date.month() }
    }

    pub fn days(&self) -> u32 {
        let first = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let next = self.succ();
        let next_first = NaiveDate::from_ymd_opt(next.year, next.month, 1).expect("valid month");
        (next_first - first).num_days() as u32
    }

    pub fn succ(&self) -> Self {
        if self.month == 12 {
            YearMonth { year: self.year + 1, month: 1 }
        } else {
            YearMonth { year: self.year, month: self.month + 1 }
        }
    }

    /// Months elapsed since year 0, for arithmetic on month offsets.
    pub fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| IndexError::Parse(format!("expected YYYY-MM, got {s:?}")))?;
        if y.len() != 4 || m.len() != 2 {
            return Err(IndexError::Parse(format!("expected YYYY-MM, got {s:?}")));
        }
        let year = y.parse().map_err(|_| IndexError::Parse(format!("bad year in {s:?}")))?;
        let month = m.parse().map_err(|_| IndexError::Parse(format!("bad month in {s:?}")))?;
        YearMonth::new(year, month)
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate, IndexError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| IndexError::Parse(format!("expected YYYY-MM-DD, got {s:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Daily,
    Monthly,
    Annual,
}

/// A day, month or year label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    Day(NaiveDate),
    Month(YearMonth),
    Year(i32),
}

impl Period {
    pub fn frequency(&self) -> Frequency {
        match self {
            Period::Day(_) => Frequency::Daily,
            Period::Month(_) => Frequency::Monthly,
            Period::Year(_) => Frequency::Annual,
        }
    }

    pub fn year(&self) -> i32 {
        match self {
            Period::Day(d) => d.year(),
            Period::Month(m) => m.year,
            Period::Year(y) => *y,
        }
    }

    /// The enclosing period at a coarser (or equal) frequency.
    pub fn coarsen(&self, target: Frequency) -> Option<Period> {
        match (self, target) {
            (p, f) if p.frequency() == f => Some(*p),
            (Period::Day(d), Frequency::Monthly) => Some(Period::Month(YearMonth::of(*d))),
            (p, Frequency::Annual) => Some(Period::Year(p.year())),
            _ => None,
        }
    }

    /// Number of `source`-frequency periods in a complete `self`.
    pub fn full_size(&self, source: Frequency) -> usize {
        match (self, source) {
            (Period::Month(m), Frequency::Daily) => m.days() as usize,
            (Period::Year(y), Frequency::Daily) => {
                if NaiveDate::from_ymd_opt(*y, 2, 29).is_some() {
                    366
                } else {
                    365
                }
            }
            (Period::Year(_), Frequency::Monthly) => 12,
            _ => 1,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Period::Month(m) => write!(f, "{m}"),
            Period::Year(y) => write!(f, "{y:04}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_month_parsing_and_days() {
        let m: YearMonth = "2020-02".parse().unwrap();
        assert_eq!(m.days(), 29);
        assert_eq!("2021-02".parse::<YearMonth>().unwrap().days(), 28);
        assert_eq!(m.to_string(), "2020-02");
        assert!("2020-13".parse::<YearMonth>().is_err());
        assert!("2020/01".parse::<YearMonth>().is_err());
        assert_eq!(YearMonth::new(2020, 12).unwrap().succ(), YearMonth::new(2021, 1).unwrap());
    }

    #[test]
    fn coarsening() {
        let d = Period::Day(parse_date("2022-05-31").unwrap());
        assert_eq!(d.coarsen(Frequency::Monthly), Some(Period::Month(YearMonth::new(2022, 5).unwrap())));
        assert_eq!(d.coarsen(Frequency::Annual), Some(Period::Year(2022)));
        assert_eq!(Period::Year(2022).coarsen(Frequency::Daily), None);
        assert_eq!(Period::Year(2020).full_size(Frequency::Daily), 366);
        assert_eq!(d.to_string(), "2022-05-31");
    }
}
