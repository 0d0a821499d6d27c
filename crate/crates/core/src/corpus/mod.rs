//! Text side of the pipeline: segmentation, vocabulary, whole-word masking,
//! pretraining pairs and fine-tuning rows.

mod finetune_data;
mod lexicon;
mod masking;
mod pretrain;
mod sequence;
mod vocab;

use std::collections::BTreeSet;
use std::io::BufRead;

use thiserror::Error;

pub use finetune_data::{read_finetune_tsv, FineTuneExample};
pub use lexicon::{segment, Lexicon};
pub use masking::{
    plan_whole_word_mask, plan_with_forced_words, MaskSettings, MaskedToken, MaskingPlan, Replacement,
};
pub use pretrain::{
    build_candidates, make_pretrain_batch, NspLabel, PretrainCorpus, PretrainExample, PretrainOptions,
};
pub use sequence::{TokenSequence, WordSpan};
pub use vocab::{Vocab, CLS, MASK, PAD, SEP, UNK};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus too small: {sentences} sentences, {pairs} consecutive pairs (need >= 3 sentences and >= 1 pair)")]
    CorpusTooSmall { sentences: usize, pairs: usize },
    #[error("lexicon words must be non-empty")]
    EmptyLexiconWord,
    #[error("word has no tokens")]
    EmptyWord,
    #[error("duplicate vocabulary token {0:?}")]
    DuplicateToken(String),
    #[error("malformed token sequence: {0}")]
    MalformedSequence(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Splits documents into sentences at terminator characters. The terminator
/// stays attached to its sentence; blank sentences are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSplitter {
    terminators: Vec<char>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            terminators: vec!['。', '！', '？', '\n'],
        }
    }
}

impl SentenceSplitter {
    pub fn new(terminators: impl IntoIterator<Item = char>) -> Self {
        SentenceSplitter {
            terminators: terminators.into_iter().collect(),
        }
    }

    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_inclusive(|c| self.terminators.contains(&c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect()
    }
}

/// False for whitespace-only and punctuation-only segments.
pub fn is_content_word(word: &str) -> bool {
    word.chars().any(|c| !c.is_whitespace() && !is_punctuation(c))
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '。' | '，' | '、' | '；' | '：' | '！' | '？' | '“' | '”' | '‘' | '’' | '（' | '）' | '《' | '》' | '…' | '—'
        )
}

/// Reads a one-word-per-line list; blank lines and `#` comments are skipped.
pub fn read_word_list<R: BufRead>(reader: R) -> Result<BTreeSet<String>, CorpusError> {
    let mut words = BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.insert(word.to_string());
    }
    Ok(words)
}

/// Reads a corpus file: one document per non-blank line.
pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<String>, CorpusError> {
    let mut docs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            docs.push(line.trim().to_string());
        }
    }
    Ok(docs)
}
