use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, CLS, SEP};
use super::CorpusError;

/// Inclusive token range `[start, end]` forming one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSpan {
    pub start: usize,
    pub end: usize,
}

impl WordSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        WordSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Token ids grouped into words, with a segment id per token.
///
/// `word_spans` always partitions `0..tokens.len()`: `[CLS]` and every
/// `[SEP]` are single-token spans of their own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    pub word_spans: Vec<WordSpan>,
    pub segment_ids: Vec<u8>,
}

impl TokenSequence {
    /// Builds `[CLS] a [SEP]` or `[CLS] a [SEP] b [SEP]` from words already
    /// split into token ids. Segment id 0 covers `[CLS]`, `a` and the first
    /// `[SEP]`; segment 1 covers `b` and the final `[SEP]`.
    pub fn from_word_segments(first: &[Vec<u32>], second: Option<&[Vec<u32>]>) -> Self {
        let mut seq = TokenSequence {
            tokens: Vec::new(),
            word_spans: Vec::new(),
            segment_ids: Vec::new(),
        };
        seq.push_word(&[CLS], 0);
        for word in first.iter().filter(|w| !w.is_empty()) {
            seq.push_word(word, 0);
        }
        seq.push_word(&[SEP], 0);
        if let Some(second) = second {
            for word in second.iter().filter(|w| !w.is_empty()) {
                seq.push_word(word, 1);
            }
            seq.push_word(&[SEP], 1);
        }
        seq
    }

    /// `[CLS] word [SEP]`, the layout used to embed a single word.
    pub fn single_word(word: &str, vocab: &Vocab) -> Result<Self, CorpusError> {
        let ids = vocab.encode_word(word);
        if ids.is_empty() {
            return Err(CorpusError::EmptyWord);
        }
        Ok(Self::from_word_segments(&[ids], None))
    }

    fn push_word(&mut self, ids: &[u32], segment: u8) {
        let start = self.tokens.len();
        self.tokens.extend_from_slice(ids);
        self.segment_ids.extend(std::iter::repeat_n(segment, ids.len()));
        self.word_spans.push(WordSpan::new(start, self.tokens.len() - 1));
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_boundary(&self, position: usize) -> bool {
        matches!(self.tokens.get(position), Some(&CLS) | Some(&SEP))
    }

    /// Checks the partition and segment invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let n = self.tokens.len();
        if self.segment_ids.len() != n {
            return Err(CorpusError::MalformedSequence("segment ids length".into()));
        }
        if self.segment_ids.iter().any(|&s| s > 1) {
            return Err(CorpusError::MalformedSequence("segment id outside {0,1}".into()));
        }
        let mut next = 0;
        for span in &self.word_spans {
            if span.start != next || span.end < span.start || span.end >= n {
                return Err(CorpusError::MalformedSequence(format!(
                    "word span {}..={} does not continue the partition at {}",
                    span.start, span.end, next
                )));
            }
            if self.segment_ids[span.start..=span.end].iter().any(|&s| s != self.segment_ids[span.start]) {
                return Err(CorpusError::MalformedSequence("word crosses segments".into()));
            }
            next = span.end + 1;
        }
        if next != n {
            return Err(CorpusError::MalformedSequence("word spans do not cover the sequence".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_layout() {
        let seq = TokenSequence::from_word_segments(&[vec![7, 8], vec![9]], Some(&[vec![10]]));
        assert_eq!(seq.tokens, vec![CLS, 7, 8, 9, SEP, 10, SEP]);
        assert_eq!(seq.segment_ids, vec![0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(
            seq.word_spans,
            vec![
                WordSpan::new(0, 0),
                WordSpan::new(1, 2),
                WordSpan::new(3, 3),
                WordSpan::new(4, 4),
                WordSpan::new(5, 5),
                WordSpan::new(6, 6)
            ]
        );
        seq.validate().unwrap();
        assert!(seq.is_boundary(0) && seq.is_boundary(4) && !seq.is_boundary(1));
    }

    #[test]
    fn broken_partition_detected() {
        let mut seq = TokenSequence::from_word_segments(&[vec![7, 8]], None);
        seq.word_spans[1] = WordSpan::new(2, 2);
        assert!(seq.validate().is_err());
    }
}
