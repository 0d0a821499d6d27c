use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndexError;

/// Direction in which an entry's search volume relates to investment activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    /// Positive below the column median, negative above it.
    TwoWay,
}

impl FromStr for Polarity {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "two_way" => Ok(Polarity::TwoWay),
            other => Err(IndexError::UnknownPolarity(other.to_string())),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::TwoWay => "two_way",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Seed,
    Expanded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Seed => "seed",
            Provenance::Expanded => "expanded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub polarity: Polarity,
    pub provenance: Provenance,
    /// Similarity that selected an expanded entry.
    pub score: Option<f64>,
}

impl Entry {
    pub fn seed(name: impl Into<String>, polarity: Polarity) -> Self {
        Entry { name: name.into(), polarity, provenance: Provenance::Seed, score: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Secondary {
    pub name: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primary {
    pub name: String,
    pub secondaries: Vec<Secondary>,
}

/// Primary → secondary → entry tree. Entry names are unique across the
/// whole tree, and so are secondary names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorHierarchy {
    pub primaries: Vec<Primary>,
}

/// One row of the hierarchy CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyRow {
    pub primary: String,
    pub secondary: String,
    pub entry: String,
    pub polarity: String,
}

impl IndicatorHierarchy {
    /// Groups rows in order of first appearance.
    pub fn from_rows<I>(rows: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (String, String, Entry)>,
    {
        let mut primaries: Vec<Primary> = Vec::new();
        for (primary, secondary, entry) in rows {
            let p = match primaries.iter().position(|p| p.name == primary) {
                Some(i) => &mut primaries[i],
                None => {
                    primaries.push(Primary { name: primary, secondaries: Vec::new() });
                    primaries.last_mut().unwrap()
                }
            };
            let s = match p.secondaries.iter().position(|s| s.name == secondary) {
                Some(i) => &mut p.secondaries[i],
                None => {
                    p.secondaries.push(Secondary { name: secondary, entries: Vec::new() });
                    p.secondaries.last_mut().unwrap()
                }
            };
            s.entries.push(entry);
        }
        let h = IndicatorHierarchy { primaries };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        let mut entries = BTreeSet::new();
        let mut secondaries = BTreeSet::new();
        if self.primaries.is_empty() {
            return Err(IndexError::Hierarchy("no indicators".into()));
        }
        for p in &self.primaries {
            for s in &p.secondaries {
                if !secondaries.insert(s.name.as_str()) {
                    return Err(IndexError::Hierarchy(format!("secondary indicator {:?} appears twice", s.name)));
                }
                if s.entries.is_empty() {
                    return Err(IndexError::Hierarchy(format!("secondary indicator {:?} has no entries", s.name)));
                }
                for e in &s.entries {
                    if e.name.trim().is_empty() {
                        return Err(IndexError::Hierarchy(format!("empty entry under {:?}", s.name)));
                    }
                    if !entries.insert(e.name.as_str()) {
                        return Err(IndexError::Hierarchy(format!("entry {:?} appears twice", e.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(primary, secondary, entry)` triples in hierarchy order.
    pub fn iter(&self) -> impl Iterator<Item = (&Primary, &Secondary, &Entry)> {
        self.primaries
            .iter()
            .flat_map(|p| p.secondaries.iter().map(move |s| (p, s)))
            .flat_map(|(p, s)| s.entries.iter().map(move |e| (p, s, e)))
    }

    pub fn entry_names(&self) -> Vec<String> {
        self.iter().map(|(_, _, e)| e.name.clone()).collect()
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.iter().map(|(_, _, e)| e).find(|e| e.name == name)
    }

    pub fn polarities(&self) -> BTreeMap<String, Polarity> {
        self.iter().map(|(_, _, e)| (e.name.clone(), e.polarity)).collect()
    }

    pub fn primary_names(&self) -> Vec<String> {
        self.primaries.iter().map(|p| p.name.clone()).collect()
    }

    pub fn primary(&self, name: &str) -> Option<&Primary> {
        self.primaries.iter().find(|p| p.name == name)
    }

    /// Entries under a primary, in hierarchy order.
    pub fn primary_entries(&self, name: &str) -> Option<Vec<&Entry>> {
        self.primary(name)
            .map(|p| p.secondaries.iter().flat_map(|s| s.entries.iter()).collect())
    }

    pub fn secondaries(&self) -> impl Iterator<Item = &Secondary> {
        self.primaries.iter().flat_map(|p| p.secondaries.iter())
    }

    /// Copy restricted to `keep`; secondaries and primaries left empty are
    /// dropped.
    pub fn retain_entries(&self, keep: &BTreeSet<String>) -> IndicatorHierarchy {
        let primaries = self
            .primaries
            .iter()
            .map(|p| Primary {
                name: p.name.clone(),
                secondaries: p
                    .secondaries
                    .iter()
                    .map(|s| Secondary {
                        name: s.name.clone(),
                        entries: s.entries.iter().filter(|e| keep.contains(&e.name)).cloned().collect(),
                    })
                    .filter(|s| !s.entries.is_empty())
                    .collect(),
            })
            .filter(|p| !p.secondaries.is_empty())
            .collect();
        IndicatorHierarchy { primaries }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, IndexError> {
        let mut rdr = csv::Reader::from_reader(reader);
        check_headers(&mut rdr, &["primary", "secondary", "entry", "polarity"])?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<HierarchyRow>().enumerate() {
            let row = rec.map_err(|e| IndexError::Csv { row: i + 2, message: e.to_string() })?;
            let polarity = row
                .polarity
                .parse()
                .map_err(|e: IndexError| IndexError::Csv { row: i + 2, message: e.to_string() })?;
            rows.push((row.primary, row.secondary, Entry::seed(row.entry.trim(), polarity)));
        }
        Self::from_rows(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), IndexError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["primary", "secondary", "entry", "polarity"])?;
        for (p, s, e) in self.iter() {
            w.write_record([p.name.as_str(), s.name.as_str(), e.name.as_str(), &e.polarity.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_headers<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), IndexError> {
    let headers = rdr.headers().map_err(|e| IndexError::Csv { row: 1, message: e.to_string() })?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(IndexError::Csv {
            row: 1,
            message: format!("expected header {expected:?}, found {got:?}"),
        });
    }
    Ok(())
}
