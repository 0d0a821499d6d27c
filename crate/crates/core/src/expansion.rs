//! Seed-word expansion by cosine similarity of word vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{Entry, IndicatorHierarchy, Polarity, Provenance};

/// Fixed-width vector standing for one word's meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordVector(pub Vec<f64>);

impl WordVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("degenerate embedding")]
    DegenerateEmbedding,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("no seed vectors for secondary indicator {0:?}")]
    NoSeeds(String),
    #[error("no ranking for secondary indicator {0:?}")]
    MissingRanking(String),
    #[error("k must be >= 1")]
    InvalidK,
    #[error("csv row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error(transparent)]
    Index(#[from] crate::index::IndexError),
}

/// `u·v / (|u| |v|)`, clamped to [-1, 1].
pub fn cosine(u: &WordVector, v: &WordVector) -> Result<f64, ExpansionError> {
    if u.dim() != v.dim() {
        return Err(ExpansionError::DimensionMismatch(u.dim(), v.dim()));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
        return Err(ExpansionError::DegenerateEmbedding);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub word: String,
    pub score: f64,
}

/// Candidates for one secondary indicator, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRanking {
    pub secondary: String,
    pub entries: Vec<RankedCandidate>,
}

/// Scores every candidate by its best cosine against the indicator's seeds
/// and sorts by descending score, ties by ascending word.
pub fn rank_candidates(
    secondary: &str,
    seed_vectors: &[WordVector],
    candidate_vectors: &BTreeMap<String, WordVector>,
) -> Result<SimilarityRanking, ExpansionError> {
    if seed_vectors.is_empty() {
        return Err(ExpansionError::NoSeeds(secondary.to_string()));
    }
    let mut entries = Vec::with_capacity(candidate_vectors.len());
    for (word, vector) in candidate_vectors {
        let mut best = f64::NEG_INFINITY;
        for seed in seed_vectors {
            best = best.max(cosine(seed, vector)?);
        }
        entries.push(RankedCandidate { word: word.clone(), score: best });
    }
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.word.cmp(&b.word)));
    Ok(SimilarityRanking { secondary: secondary.to_string(), entries })
}

/// The first `min(k, len)` ranked candidates.
pub fn select_top(ranking: &SimilarityRanking, k: usize) -> Result<Vec<RankedCandidate>, ExpansionError> {
    if k == 0 {
        return Err(ExpansionError::InvalidK);
    }
    Ok(ranking.entries.iter().take(k).cloned().collect())
}

/// Keeps words that are available and not excluded, preserving order.
pub fn filter_expansion(
    selected: &[RankedCandidate],
    availability: &BTreeSet<String>,
    exclusions: &BTreeSet<String>,
) -> Vec<RankedCandidate> {
    selected
        .iter()
        .filter(|c| availability.contains(&c.word) && !exclusions.contains(&c.word))
        .cloned()
        .collect()
}

/// One row of the expansion CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub secondary_indicator: String,
    pub word: String,
    pub score: f64,
    pub provenance: Provenance,
}

/// Seed and expanded entries per secondary indicator. Seeds carry score 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ExpansionError> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row).map_err(|e| ExpansionError::Csv { row: 0, message: e.to_string() })?;
        }
        w.flush().map_err(|e| ExpansionError::Csv { row: 0, message: e.to_string() })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ExpansionError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize().enumerate() {
            rows.push(rec.map_err(|e| ExpansionError::Csv { row: i + 2, message: e.to_string() })?);
        }
        Ok(ExpansionResult { rows })
    }

    pub fn expanded_words(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .filter(|r| r.provenance == Provenance::Expanded)
            .map(|r| r.word.clone())
            .collect()
    }
}

/// Knobs of [`expand_hierarchy`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionOptions {
    pub top_k: usize,
    /// Polarity given to expanded words that have no override.
    pub default_polarity: Polarity,
    pub polarity_overrides: BTreeMap<String, Polarity>,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { top_k: 50, default_polarity: Polarity::Positive, polarity_overrides: BTreeMap::new() }
    }
}

/// Adds the filtered top-k candidates of every secondary indicator to the
/// hierarchy. A word selected under several indicators is kept only where it
/// scored highest (earliest indicator on ties), so entry names stay unique.
pub fn expand_hierarchy(
    hierarchy: &IndicatorHierarchy,
    rankings: &BTreeMap<String, SimilarityRanking>,
    availability: &BTreeSet<String>,
    exclusions: &BTreeSet<String>,
    options: &ExpansionOptions,
) -> Result<(IndicatorHierarchy, ExpansionResult), ExpansionError> {
    let existing: BTreeSet<String> = hierarchy.entry_names().into_iter().collect();
    let mut picks: Vec<(String, Vec<RankedCandidate>)> = Vec::new();
    for secondary in hierarchy.secondaries() {
        let ranking = rankings
            .get(&secondary.name)
            .ok_or_else(|| ExpansionError::MissingRanking(secondary.name.clone()))?;
        let selected = select_top(ranking, options.top_k)?;
        let kept: Vec<RankedCandidate> = filter_expansion(&selected, availability, exclusions)
            .into_iter()
            .filter(|c| !existing.contains(&c.word))
            .collect();
        picks.push((secondary.name.clone(), kept));
    }

    // owner of each word: highest score, first indicator on ties
    let mut owner: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (idx, (_, kept)) in picks.iter().enumerate() {
        for c in kept {
            match owner.get(c.word.as_str()) {
                Some(&(_, best)) if best >= c.score => {}
                _ => {
                    owner.insert(c.word.as_str(), (idx, c.score));
                }
            }
        }
    }
    let mut additions: BTreeMap<String, Vec<RankedCandidate>> = BTreeMap::new();
    for (idx, (name, kept)) in picks.iter().enumerate() {
        let mine = kept.iter().filter(|c| owner[c.word.as_str()].0 == idx).cloned().collect();
        additions.insert(name.clone(), mine);
    }

    let mut expanded = hierarchy.clone();
    let mut rows = Vec::new();
    for p in &mut expanded.primaries {
        for s in &mut p.secondaries {
            for e in &s.entries {
                rows.push(ExpansionRow {
                    secondary_indicator: s.name.clone(),
                    word: e.name.clone(),
                    score: e.score.unwrap_or(1.0),
                    provenance: e.provenance,
                });
            }
            for c in &additions[&s.name] {
                let polarity = options.polarity_overrides.get(&c.word).copied().unwrap_or(options.default_polarity);
                s.entries.push(Entry {
                    name: c.word.clone(),
                    polarity,
                    provenance: Provenance::Expanded,
                    score: Some(c.score),
                });
                rows.push(ExpansionRow {
                    secondary_indicator: s.name.clone(),
                    word: c.word.clone(),
                    score: c.score,
                    provenance: Provenance::Expanded,
                });
            }
        }
    }
    expanded.validate()?;
    Ok((expanded, ExpansionResult { rows }))
}
